"""Closed-form densities and a ledger of published constants.

Each :class:`KnownValue` carries an expression (evaluated by a small
arithmetic interpreter), an independently transcribed high-precision
decimal, and the truncated figure as it is usually quoted.  The tests
check all three against each other.
"""
from __future__ import annotations

import ast
import csv
import io
import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple


class UnknownConstantError(KeyError):
    pass


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi}
_FUNCS = {"sqrt": math.sqrt}


def evaluate(expr: str) -> float:
    """Evaluate an arithmetic expression over numbers, ``pi`` and ``sqrt``."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1):
            return _FUNCS[node.func.id](walk(node.args[0]))
        raise ValueError(f"unsupported expression element {ast.dump(node)}")

    return float(walk(ast.parse(expr, mode="eval")))


@dataclass(frozen=True)
class KnownValue:
    name: str
    expression: str
    decimal: str
    printed: str
    kind: str
    anchor: str
    note: str = ""

    @property
    def value(self) -> float:
        return evaluate(self.expression)

    @property
    def fraction(self) -> Fraction | None:
        try:
            f = Fraction(self.expression.replace(" ", ""))
        except ValueError:
            return None
        return f

    def matches_decimal(self, tol: float = 1e-12) -> bool:
        return abs(float(self.decimal) - self.value) <= tol

    def matches_printed(self) -> bool:
        """True if the quoted figure is a truncation (or rounding) of the value."""
        if not self.printed:
            return True
        digits = len(self.printed.split(".")[1]) if "." in self.printed else 0
        p = float(self.printed)
        v = self.value
        return math.floor(v * 10 ** digits + 1e-9) == round(p * 10 ** digits) or round(v, digits) == p


def _kv(name, expression, decimal, printed, kind, anchor, note=""):
    return KnownValue(name, expression, decimal, printed, kind, anchor, note)


DENSITIES = {v.name: v for v in [
    _kv("ball", "pi/sqrt(18)", "0.740480489693061041", "0.74048", "density",
        "lattice density table: ball (Gauss)"),
    _kv("octahedron", "18/19", "0.947368421052631579", "0.9473", "density",
        "lattice density table: regular octahedron (Minkowski)"),
    _kv("double_cone", "pi*sqrt(6)/9", "0.855033220107909397", "0.85503", "density",
        "lattice density table: double cone (Whitworth)"),
    _kv("tetrahedron", "18/49", "0.367346938775510204", "0.3673", "density",
        "lattice density table: tetrahedron (Groemer, Hoylman)"),
    _kv("cube", "1", "1", "", "density", "space-filling"),
    _kv("rhombic_dodecahedron_kepler", "(4*pi/3)/(4*sqrt(2))", "0.740480489693061041", "0.740480",
        "density", "Kepler: ball volume over circumscribed rhombic dodecahedron"),
    _kv("infinite_cylinder", "pi/sqrt(12)", "0.906899682117108925", "", "density",
        "circular cylinder: planar disk density"),
    _kv("circle_2d", "pi/sqrt(12)", "0.906899682117108925", "", "density", "planar disk lattice density"),
    _kv("square_2d", "1", "1", "", "density", "planar tiling"),
    _kv("hexagon_2d", "1", "1", "", "density", "planar tiling"),
]}

BOUNDS = {v.name: v for v in [
    _kv("cone_T_max_lower", "448/819", "0.547008547008547009", "0.547", "bound",
        "square pyramid: 4 times difference-body density 112/117 over 7"),
    _kv("cone_T_max_upper", "4/7", "0.571428571428571429", "0.571", "bound",
        "cones: translative density strictly below 4/7"),
    _kv("square_pyramid_difference_body", "112/117", "0.957264957264957265", "", "constant",
        "lattice density of the square pyramid difference body (Betke, Henk)"),
    _kv("square_pyramid_two_layer", "8/15", "0.533333333333333333", "0.533", "bound",
        "two-layer lattice packing of the square pyramid"),
    _kv("circular_cone_L_lower", "(2+sqrt(2))*pi/24", "0.446919510222414697", "0.4469", "bound",
        "circular cone lattice density, construction"),
    _kv("circular_cone_L_upper", "sqrt(2)*pi/9", "0.493653659795374027", "0.4936", "bound",
        "circular cone lattice density, inscribed ellipsoid in the difference body"),
    _kv("tammela_hexagon_ratio", "3.570624/4", "0.892656", "", "constant",
        "Tammela: area(K)/area(H) for the best enclosing symmetric hexagon H",
        "printed as the hexagon area for area(K)=1; stored as the area ratio"),
    _kv("cone_T_min_lower", "3.570624/8", "0.446328", "0.446328", "bound",
        "cones over symmetric disks: half the Tammela ratio"),
    _kv("petty_parallelogram", "4/3", "1.33333333333333333", "", "constant",
        "Petty: enclosing parallelogram area ratio, sharp for affine-regular hexagons"),
    _kv("cone_symmetric_Tstar_lower", "27/38", "0.710526315789473684", "0.7105", "bound",
        "cones with symmetric bases, packings by K and -K"),
    _kv("cone_Tstar_lower", "9/19", "0.473684210526315789", "0.47368", "bound",
        "cones with arbitrary convex bases, packings by K and -K"),
    _kv("octahedron_Lstar_lower", "18/19", "0.947368421052631579", "", "bound",
        "double lattice constant bounded below by the octahedron"),
    _kv("keg_tetrahedron_Tstar", "(139+40*sqrt(10))/369", "0.719488093243184751", "0.7194880", "bound",
        "tetrahedron and its negative (Kallus, Elser, Gravel)"),
    _kv("smith_symmetric", "0.53835", "0.53835", "0.53835", "bound",
        "Smith: packing density lower bound for symmetric convex bodies",
        "source sentence truncated; scope (centrally symmetric bodies in space) inferred"),
    _kv("planar_convex_disk", "sqrt(3)/2", "0.866025403784438647", "", "bound",
        "packing density of every planar convex disk"),
    _kv("convex_body_lower", "sqrt(3)/6", "0.288675134594812882", "0.288", "bound",
        "packing density of every convex body in space"),
    _kv("hexagon_pair_large", "3/4", "0.75", "", "bound", "large hexagons in the {H, H/2} lattice packing"),
    _kv("cone_over_hexagon", "1/2", "0.5", "", "bound", "cones over symmetric hexagons, two-layer lattice"),
    _kv("conway_torquato_uniform", "2/3", "0.666666666666666667", "", "density",
        "uniform two-tetrahedron packing (Conway, Torquato)"),
    _kv("difference_ratio_min", "2/5", "0.4", "", "constant", "vol(K)/vol(DK) minimum, attained by simplices"),
    _kv("difference_ratio_cone", "4/7", "0.571428571428571429", "", "constant",
        "vol(K)/vol(DK) for every cone over a symmetric base"),
    _kv("conway_torquato_cluster", "0.717455", "0.717455", "0.717455", "record",
        "tetrahedra, 17-tetrahedron repeating unit"),
    _kv("chen_2008", "0.7786", "0.7786", "0.7786", "record", "tetrahedra (Chen)"),
    _kv("torquato_jiao_2009a", "0.782", "0.782", "0.782", "record", "tetrahedra (Torquato, Jiao)"),
    _kv("torquato_jiao_2009b", "0.823", "0.823", "0.823", "record", "tetrahedra (Torquato, Jiao)"),
    _kv("haji_akhbari_2009", "0.8324", "0.8324", "0.8324", "record", "tetrahedra (Haji-Akhbari et al.)"),
    _kv("keg_2009", "100/117", "0.854700854700854701", "0.85470", "record", "tetrahedra (Kallus, Elser, Gravel)"),
    _kv("torquato_jiao_2010", "12250/14319", "0.855506669460157832", "0.855506", "record",
        "tetrahedra (Torquato, Jiao)"),
    _kv("chen_engel_glotzer_2010", "4000/4671", "0.856347677156925712", "0.856347", "record",
        "tetrahedra (Chen, Engel, Glotzer)"),
    _kv("ellipsoids_dsct", "0.770732", "0.770732", "0.770732", "record",
        "congruent ellipsoids of aspect ratio sqrt(3) (Donev et al.)"),
]}

# ordered pairs (smaller, larger) that must hold strictly
CONSISTENCY = [
    ("cone_T_max_lower", "cone_T_max_upper"),
    ("square_pyramid_two_layer", "cone_T_max_lower"),
    ("circular_cone_L_lower", "circular_cone_L_upper"),
    ("cone_Tstar_lower", "cone_symmetric_Tstar_lower"),
    ("cone_T_min_lower", "cone_over_hexagon"),
    ("cone_symmetric_Tstar_lower", "octahedron_Lstar_lower"),
    ("convex_body_lower", "smith_symmetric"),
    ("conway_torquato_uniform", "keg_tetrahedron_Tstar"),
    ("keg_2009", "torquato_jiao_2010"),
    ("torquato_jiao_2010", "chen_engel_glotzer_2010"),
]


def known_density(name: str) -> KnownValue:
    try:
        return DENSITIES[name]
    except KeyError:
        raise UnknownConstantError(f"no known density {name!r}") from None


def paper_bound(name: str) -> KnownValue:
    try:
        return BOUNDS[name]
    except KeyError:
        raise UnknownConstantError(f"no stored bound {name!r}") from None


def all_values() -> list[KnownValue]:
    return list(DENSITIES.values()) + list(BOUNDS.values())


def consistency_report() -> list[tuple[str, str, bool]]:
    return [(lo, hi, BOUNDS[lo].value < BOUNDS[hi].value) for lo, hi in CONSISTENCY]


# --- cube slab --------------------------------------------------------------

class SlabValue(NamedTuple):
    value: float
    branch: int
    continuity_flag: bool
    note: str


WHITWORTH_ENDPOINTS = (Fraction(1, 2), Fraction(1))


def _whitworth_branch(lam, branch: int, printed: bool = True):
    if branch == 1:
        return (9 - lam ** 2) / 9
    if branch == 2:
        c = Fraction(1, 4) if printed else Fraction(9, 4)
        return c * lam * (9 - lam ** 2) / (-lam ** 3 - 3 * lam ** 2 + 24 * lam - 1)
    if branch == 3:
        return Fraction(9, 8) * (lam ** 3 - 9 * lam ** 2 + 27 * lam - 3) / (lam * (lam ** 2 - 9 * lam + 27))
    raise ValueError(f"branch must be 1, 2 or 3, got {branch}")


def whitworth_endpoints(printed: bool = True) -> list[dict]:
    """Values of adjacent branches at their shared endpoints."""
    out = []
    for k, e in enumerate(WHITWORTH_ENDPOINTS, start=1):
        left, right = _whitworth_branch(e, k, printed), _whitworth_branch(e, k + 1, printed)
        out.append({"lam": e, "branches": (k, k + 1), "left": left, "right": right,
                    "agree": abs(float(left) - float(right)) <= 1e-9})
    return out


def whitworth_slab_density(lam, branch: int | None = None, printed: bool = True) -> SlabValue:
    """Lattice packing density of ``{|x_i| <= 1, |x_1+x_2+x_3| <= lam}``.

    The three-branch formula is evaluated as usually printed: the middle
    branch carries the coefficient 1/4, which makes it disagree with both
    neighbours (2/19 against 18/19 at ``lam = 1``).  ``printed=False``
    uses the coefficient 9/4, which is continuous at both ends and agrees
    with the optimizer.  The last branch is printed with the empty range
    ``1 <= lam <= 1`` and is used on ``[1, 3]``.

    ``continuity_flag`` is False when ``lam`` sits on a shared endpoint at
    which the two adjacent branches disagree.
    """
    if not 0 < lam <= 3:
        raise ValueError(f"lambda must lie in (0, 3], got {lam}")
    if branch is None:
        branch = 1 if lam <= Fraction(1, 2) else 2 if lam < 1 else 3
    notes = []
    if branch == 3:
        notes.append("printed range 1 <= lam <= 1, evaluated on [1, 3]")
    value = _whitworth_branch(lam, branch, printed)
    flag = True
    for ep in whitworth_endpoints(printed):
        if abs(float(lam) - float(ep["lam"])) <= 1e-9 and not ep["agree"]:
            flag = False
            notes.append(f"branches {ep['branches']} disagree at lam = {ep['lam']}: "
                         f"{ep['left']} vs {ep['right']}")
    return SlabValue(value, branch, flag, "; ".join(notes))


def chalk_slab_density(lam) -> float:
    """Lattice packing density of ``{|x| <= 1, |x_3| <= lam}``: ``(pi/6) sqrt(3 - lam^2)``."""
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    return math.pi / 6 * math.sqrt(3 - float(lam) ** 2)


def dump_csv(values: list[KnownValue] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "kind", "expression", "value", "decimal", "printed", "anchor", "note"])
    for v in values or all_values():
        w.writerow([v.name, v.kind, v.expression, repr(v.value), v.decimal, v.printed, v.anchor, v.note])
    for ep in whitworth_endpoints():
        w.writerow([f"whitworth_lam_{ep['lam']}", "check", f"branches {ep['branches']}",
                    f"{float(ep['left'])!r} vs {float(ep['right'])!r}", "", "", "cube slab formula",
                    "consistent" if ep["agree"] else "printed branches disagree"])
    return buf.getvalue()


__all__ = [
    "KnownValue",
    "SlabValue",
    "UnknownConstantError",
    "DENSITIES",
    "BOUNDS",
    "CONSISTENCY",
    "evaluate",
    "known_density",
    "paper_bound",
    "all_values",
    "consistency_report",
    "whitworth_slab_density",
    "whitworth_endpoints",
    "chalk_slab_density",
    "dump_csv",
]
