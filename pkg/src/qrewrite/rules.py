"""Catalog of rewrite rules: local pattern -> replacement pairs with
applicability conditions.

Twelve cataloged equivalences (inverse cancellation, null controls and
targets, CZ symmetry, CNOT/CZ interchange, CNOT reversal corollaries,
deferred measurement, XOR substitution, distributed CNOT, CNOT mirror,
parallel-to-lambda) plus structural engine rules (adjacent commutations,
discarded-wire cleanup, measurement insertion on discarded wires, Bell
preparation folding) that the derivation scripts rely on.

Patterns and replacements are expressed as instruction templates whose
wire slots hold variable names; grounding a template with a binding map
gives concrete instructions. A rule's `condition` is a static, syntactic
predicate on the circuit at the match site (for example "this wire is
provably in |+> here").
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .circuit import (
    Circuit,
    ClassicalCtrl,
    ClassicalXor,
    Gate1,
    Gate2,
    Instruction,
    Measure,
    PrepDecl,
    prep_plus,
    prep_zero,
    read_cbits,
    touched_at_or_after,
    touched_before,
    wire_state_before,
    written_cbit,
)

Bindings = Mapping[str, object]
TemplateFn = Callable[[Bindings, str], list[Instruction]]
PrepFn = Callable[[Bindings, str], list[PrepDecl]]
ConditionFn = Callable[[Circuit, tuple[int, ...], Bindings, str, str], "str | None"]


@dataclass(frozen=True)
class RewriteRule:
    id: str
    pattern: TemplateFn
    replacement: TemplateFn
    variants: tuple[str, ...] = ("default",)
    pure_gate: bool = False
    prep_pattern: PrepFn | None = None
    prep_replacement: PrepFn | None = None
    condition: ConditionFn | None = None
    # pairs of quantum variables allowed to bind the same wire
    alias_ok: frozenset[frozenset[str]] = field(default_factory=frozenset)


class _Idents(dict):
    """Binding map that returns the key itself: grounds a template into
    a template (used to discover which variables a rule mentions)."""

    def __missing__(self, key):
        return key


IDENT = _Idents()


# ----------------------------------------------------------------------
# Rule I: null gates
# ----------------------------------------------------------------------


def _inverse_pattern(b: Bindings, v: str) -> list[Instruction]:
    if v in ("H", "X", "Z"):
        return [Gate1(v, b["w"]), Gate1(v, b["w"])]
    return [Gate2(v, b["c"], b["t"]), Gate2(v, b["c"], b["t"])]


R1_INVERSE = RewriteRule(
    id="R1_InverseCancel",
    pattern=_inverse_pattern,
    replacement=lambda b, v: [],
    variants=("H", "X", "Z", "CNOT", "CZ"),
    pure_gate=True,
)


def _target_plus_cond(c, site, b, v, direction) -> str | None:
    if wire_state_before(c, b["t"], site[0]) != "plus":
        return "target wire is not provably |+> at this point"
    return None


R1_TARGET_PLUS = RewriteRule(
    id="R1_TargetPlus",
    pattern=lambda b, v: [Gate2("CNOT", b["c"], b["t"])],
    replacement=lambda b, v: [],
    condition=_target_plus_cond,
)


def _control_zero_cond(c, site, b, v, direction) -> str | None:
    if wire_state_before(c, b["c"], site[0]) != "zero":
        return "control wire is not provably |0> at this point"
    return None


R1_CONTROL_ZERO = RewriteRule(
    id="R1_ControlZero",
    pattern=lambda b, v: [Gate2(v, b["c"], b["t"])],
    replacement=lambda b, v: [],
    variants=("CNOT", "CZ"),
    condition=_control_zero_cond,
)

# ----------------------------------------------------------------------
# Rule II: control reversal and corollaries
# ----------------------------------------------------------------------

R2_CZ_FLIP = RewriteRule(
    id="R2_CZFlip",
    pattern=lambda b, v: [Gate2("CZ", b["a"], b["b"])],
    replacement=lambda b, v: [Gate2("CZ", b["b"], b["a"])],
    pure_gate=True,
)

R2_CNOT_VIA_CZ = RewriteRule(
    id="R2_CNOTviaCZ",
    pattern=lambda b, v: [Gate2("CNOT", b["c"], b["t"])],
    replacement=lambda b, v: [
        Gate1("H", b["t"]),
        Gate2("CZ", b["c"], b["t"]),
        Gate1("H", b["t"]),
    ],
    pure_gate=True,
)

R2_CNOT_REVERSAL = RewriteRule(
    id="R2_CNOTReversal",
    pattern=lambda b, v: [
        Gate1("H", b["c"]),
        Gate1("H", b["t"]),
        Gate2("CNOT", b["c"], b["t"]),
        Gate1("H", b["c"]),
        Gate1("H", b["t"]),
    ],
    replacement=lambda b, v: [Gate2("CNOT", b["t"], b["c"])],
    pure_gate=True,
)

R2_H_MIRROR = RewriteRule(
    id="R2_HMirror",
    pattern=lambda b, v: [
        Gate1("H", b["c"]),
        Gate1("H", b["t"]),
        Gate2("CNOT", b["c"], b["t"]),
    ],
    replacement=lambda b, v: [
        Gate2("CNOT", b["t"], b["c"]),
        Gate1("H", b["c"]),
        Gate1("H", b["t"]),
    ],
    pure_gate=True,
)

# ----------------------------------------------------------------------
# Rule III: deferred measurement
# ----------------------------------------------------------------------


def _r3_pattern(b: Bindings, v: str) -> list[Instruction]:
    kind = "CX" if v == "cX" else "CZC"
    return [Measure(b["m"], b["r"]), ClassicalCtrl(kind, b["r"], b["t"])]


def _r3_replacement(b: Bindings, v: str) -> list[Instruction]:
    kind = "CNOT" if v == "cX" else "CZ"
    return [Gate2(kind, b["m"], b["t"]), Measure(b["m"], b["r"])]


R3_DEFER = RewriteRule(
    id="R3_DeferMeasure",
    pattern=_r3_pattern,
    replacement=_r3_replacement,
    variants=("cX", "cZ"),
)

# ----------------------------------------------------------------------
# Rule IV: quantum-classical substitution (CNOT -> XOR)
# ----------------------------------------------------------------------


def _r4_pattern(b: Bindings, v: str) -> list[Instruction]:
    kind = "CX" if v == "cX" else "CZC"
    return [
        Gate2("CNOT", b["a"], b["b"]),
        Measure(b["a"], b["r1"]),
        Measure(b["b"], b["r2"]),
        ClassicalCtrl(kind, b["r2"], b["t"]),
    ]


def _r4_replacement(b: Bindings, v: str) -> list[Instruction]:
    kind = "CX" if v == "cX" else "CZC"
    return [
        Measure(b["a"], b["r1"]),
        Measure(b["b"], b["r2"]),
        ClassicalXor(b["r1"], b["r2"], b["r3"]),
        ClassicalCtrl(kind, b["r3"], b["t"]),
    ]


def _r4_condition(c, site, b, v, direction) -> str | None:
    bw, r2 = b["b"], b["r2"]
    r3 = b.get("r3")
    if c.q_roles[bw] != "discard":
        return "measured operand b must have role discard"
    i_m2 = site[2] if direction == "forward" else site[1]
    if touched_at_or_after(c, bw, i_m2 + 1, skip=site):
        return "wire b is used after its measurement"
    for j, instr in enumerate(c.body):
        if j in site:
            continue
        if r2 in read_cbits(instr):
            return "classical wire r2 has readers outside the match"
        if isinstance(r3, int):
            if r3 in read_cbits(instr) or r3 == written_cbit(instr):
                return "classical wire r3 is not fresh"
    return None


R4_XOR_SUBST = RewriteRule(
    id="R4_XorSubstitute",
    pattern=_r4_pattern,
    replacement=_r4_replacement,
    variants=("cX", "cZ"),
    condition=_r4_condition,
)

# ----------------------------------------------------------------------
# Rule V: distributed CNOT
# ----------------------------------------------------------------------


def _r5_replacement(b: Bindings, v: str) -> list[Instruction]:
    c, t, a = b["c"], b["t"], b["a"]
    if v == "i":
        return [
            Gate2("CNOT", c, a),
            Gate2("CNOT", a, t),
            Gate2("CNOT", c, a),
            Gate2("CNOT", a, t),
        ]
    return [
        Gate2("CNOT", a, t),
        Gate2("CNOT", c, a),
        Gate2("CNOT", a, t),
        Gate2("CNOT", c, a),
    ]


R5_DISTRIBUTE = RewriteRule(
    id="R5_DistributeCNOT",
    pattern=lambda b, v: [Gate2("CNOT", b["c"], b["t"])],
    replacement=_r5_replacement,
    variants=("i", "ii"),
    pure_gate=True,
)

# ----------------------------------------------------------------------
# Rule VI: CNOT mirror (chained CNOTs reflect off a long CNOT)
# ----------------------------------------------------------------------


def _r6_pattern(b: Bindings, v: str) -> list[Instruction]:
    ab = Gate2("CNOT", b["a"], b["b"])
    bc = Gate2("CNOT", b["b"], b["c"])
    return [ab, bc] if v[0] == "A" else [bc, ab]


def _r6_replacement(b: Bindings, v: str) -> list[Instruction]:
    ab = Gate2("CNOT", b["a"], b["b"])
    bc = Gate2("CNOT", b["b"], b["c"])
    long = Gate2("CNOT", b["a"], b["c"])
    base = [bc, ab] if v[0] == "A" else [ab, bc]
    base.insert(int(v[1]), long)
    return base


R6_MIRROR = RewriteRule(
    id="R6_CNOTMirror",
    pattern=_r6_pattern,
    replacement=_r6_replacement,
    variants=("A0", "A1", "A2", "B0", "B1", "B2"),
    pure_gate=True,
)

# ----------------------------------------------------------------------
# Rule VII: parallel to lambda
# ----------------------------------------------------------------------

R7_LAMBDA = RewriteRule(
    id="R7_ParallelToLambda",
    pattern=lambda b, v: [
        Gate2("CNOT", b["c"], b["t1"]),
        Gate2("CNOT", b["c"], b["t2"]),
    ],
    replacement=lambda b, v: [
        Gate2("CNOT", b["t1"], b["t2"]),
        Gate2("CNOT", b["c"], b["t1"]),
        Gate2("CNOT", b["t1"], b["t2"]),
    ],
    pure_gate=True,
)

# ----------------------------------------------------------------------
# Structural engine rules
# ----------------------------------------------------------------------

CONTROLS_COMMUTE = RewriteRule(
    id="ControlsCommute",
    pattern=lambda b, v: [
        Gate2("CNOT", b["c"], b["a"]),
        Gate2("CNOT", b["c"], b["b"]),
    ],
    replacement=lambda b, v: [
        Gate2("CNOT", b["c"], b["b"]),
        Gate2("CNOT", b["c"], b["a"]),
    ],
    pure_gate=True,
)

TARGETS_COMMUTE = RewriteRule(
    id="TargetsCommute",
    pattern=lambda b, v: [
        Gate2("CNOT", b["a"], b["t"]),
        Gate2("CNOT", b["b"], b["t"]),
    ],
    replacement=lambda b, v: [
        Gate2("CNOT", b["b"], b["t"]),
        Gate2("CNOT", b["a"], b["t"]),
    ],
    pure_gate=True,
)


def _cz_cnot_pattern(b: Bindings, v: str) -> list[Instruction]:
    cz = Gate2("CZ", b["x"], b["y"])
    cnot = Gate2("CNOT", b["a"], b["t"])
    return [cz, cnot] if v == "cz_first" else [cnot, cz]


def _cz_cnot_replacement(b: Bindings, v: str) -> list[Instruction]:
    return list(reversed(_cz_cnot_pattern(b, v)))


CZ_CONTROL_COMMUTE = RewriteRule(
    id="CzControlCommute",
    pattern=_cz_cnot_pattern,
    replacement=_cz_cnot_replacement,
    variants=("cz_first", "cnot_first"),
    pure_gate=True,
    # the CZ may share the CNOT's control wire (both preserve its basis),
    # never its target
    alias_ok=frozenset({frozenset({"a", "x"}), frozenset({"a", "y"})}),
)


def _tail_cond(c, site, b, v, direction) -> str | None:
    w = b["w"]
    if c.q_roles[w] != "discard":
        return "wire must have role discard"
    after = site[0] + 1 if direction == "forward" else site[0]
    if touched_at_or_after(c, w, after, skip=site if direction == "forward" else ()):
        return "wire is used again later"
    return None


DISCARDED_TAIL = RewriteRule(
    id="DiscardedWireTail",
    pattern=lambda b, v: [Gate1(v, b["w"])],
    replacement=lambda b, v: [],
    variants=("H", "X", "Z"),
    condition=_tail_cond,
)


def _measure_discarded_cond(c, site, b, v, direction) -> str | None:
    w = b["w"]
    r = b.get("r")
    if c.q_roles[w] != "discard":
        return "wire must have role discard"
    after = site[0] if direction == "forward" else site[0] + 1
    if touched_at_or_after(c, w, after, skip=() if direction == "forward" else site):
        return "wire is used again after the measurement point"
    if isinstance(r, int):
        for j, instr in enumerate(c.body):
            if j in site and direction == "backward":
                continue
            if r in read_cbits(instr):
                return "classical result wire is read"
            if direction == "forward" and r == written_cbit(instr):
                return "classical result wire is already assigned"
    return None


MEASURE_DISCARDED = RewriteRule(
    id="MeasureDiscarded",
    pattern=lambda b, v: [],
    replacement=lambda b, v: [Measure(b["w"], b["r"])],
    condition=_measure_discarded_cond,
)


def _fold_pattern(b: Bindings, v: str) -> list[Instruction]:
    if v == "hcnot":
        return [Gate1("H", b["a"]), Gate2("CNOT", b["a"], b["b"])]
    return [Gate2("CNOT", b["a"], b["b"])]


def _fold_prep_pattern(b: Bindings, v: str) -> list[PrepDecl]:
    first = prep_zero(b["a"]) if v == "hcnot" else prep_plus(b["a"])
    return [first, prep_zero(b["b"])]


def _fold_cond(c, site, b, v, direction) -> str | None:
    if touched_before(c, (b["a"], b["b"]), site[0]):
        return "pair wires are touched before the fold point"
    return None


BELL_PREP_FOLD = RewriteRule(
    id="BellPrepFold",
    pattern=_fold_pattern,
    replacement=lambda b, v: [],
    variants=("hcnot", "plus"),
    prep_pattern=_fold_prep_pattern,
    prep_replacement=lambda b, v: [PrepDecl("bell", (b["a"], b["b"]))],
    condition=_fold_cond,
)

# "Commute" (adjacent disjoint-support swap) is handled specially by the
# engine; it is listed here so rule ids are uniform and CLI-visible.
COMMUTE = RewriteRule(
    id="Commute",
    pattern=lambda b, v: [],
    replacement=lambda b, v: [],
    pure_gate=True,
)

CATALOG_IDS = (
    "R1_InverseCancel",
    "R1_TargetPlus",
    "R1_ControlZero",
    "R2_CZFlip",
    "R2_CNOTviaCZ",
    "R2_CNOTReversal",
    "R2_HMirror",
    "R3_DeferMeasure",
    "R4_XorSubstitute",
    "R5_DistributeCNOT",
    "R6_CNOTMirror",
    "R7_ParallelToLambda",
)

STRUCTURAL_IDS = (
    "Commute",
    "ControlsCommute",
    "TargetsCommute",
    "CzControlCommute",
    "DiscardedWireTail",
    "MeasureDiscarded",
    "BellPrepFold",
)

RULES: dict[str, RewriteRule] = {
    r.id: r
    for r in (
        R1_INVERSE,
        R1_TARGET_PLUS,
        R1_CONTROL_ZERO,
        R2_CZ_FLIP,
        R2_CNOT_VIA_CZ,
        R2_CNOT_REVERSAL,
        R2_H_MIRROR,
        R3_DEFER,
        R4_XOR_SUBST,
        R5_DISTRIBUTE,
        R6_MIRROR,
        R7_LAMBDA,
        CONTROLS_COMMUTE,
        TARGETS_COMMUTE,
        CZ_CONTROL_COMMUTE,
        DISCARDED_TAIL,
        MEASURE_DISCARDED,
        BELL_PREP_FOLD,
        COMMUTE,
    )
}


def template_side(
    rule: RewriteRule, direction: str, which: str
) -> tuple[TemplateFn, PrepFn | None]:
    """Template functions for the matched ("src") or produced ("dst") side."""
    forward = direction == "forward"
    take_pattern = (which == "src") == forward
    if take_pattern:
        return rule.pattern, rule.prep_pattern
    return rule.replacement, rule.prep_replacement


def template_variables(instrs: list[Instruction]) -> tuple[str, ...]:
    """Variable names (string-valued wire slots) of a template, in order."""
    seen: list[str] = []
    from .circuit import FIELD_KINDS

    for instr in instrs:
        for name, _ in FIELD_KINDS[type(instr)]:
            val = getattr(instr, name)
            if isinstance(val, str) and val not in seen:
                seen.append(val)
    return tuple(seen)


def variable_kinds(rule: RewriteRule) -> dict[str, str]:
    """Map each variable of a rule to its wire kind ("q" or "c")."""
    from .circuit import FIELD_KINDS

    kinds: dict[str, str] = {}
    for variant in rule.variants:
        for fn in (rule.pattern, rule.replacement):
            for instr in fn(IDENT, variant):
                for name, kind in FIELD_KINDS[type(instr)]:
                    val = getattr(instr, name)
                    if isinstance(val, str):
                        kinds[val] = kind
        for prep_fn in (rule.prep_pattern, rule.prep_replacement):
            if prep_fn is None:
                continue
            for p in prep_fn(IDENT, variant):
                for w in p.wires:
                    if isinstance(w, str):
                        kinds[w] = "q"
    return kinds


def ground(instrs: list[Instruction], bindings: Bindings) -> list[Instruction]:
    """Substitute variables with bound wires; bindings must be total."""
    from dataclasses import fields, replace as dc_replace

    out = []
    for instr in instrs:
        subs = {}
        for f in fields(instr):
            val = getattr(instr, f.name)
            if isinstance(val, str) and f.name != "kind":
                if val not in bindings:
                    raise KeyError(f"missing binding for variable {val!r}")
                subs[f.name] = bindings[val]
        out.append(dc_replace(instr, **subs) if subs else instr)
    return out


def ground_preps(preps: list[PrepDecl], bindings: Bindings) -> list[PrepDecl]:
    out = []
    for p in preps:
        ws = tuple(bindings[w] if isinstance(w, str) else w for w in p.wires)
        if p.kind == "bell":
            ws = (min(ws), max(ws))
        out.append(PrepDecl(p.kind, ws))
    return out


def instantiate(
    rule_id: str,
    bindings: Bindings,
    variant: str | None = None,
    direction: str = "forward",
) -> tuple[list[Instruction], list[Instruction]]:
    """Concrete (pattern, replacement) instruction lists for a rule.

    Bindings must be total and injective on quantum variables (up to the
    rule's declared aliases); fresh wires introduced by the replacement
    (R4's r3, R5's ancilla) must be supplied.
    """
    if rule_id not in RULES:
        raise KeyError(f"unknown rule id {rule_id!r}")
    rule = RULES[rule_id]
    variant = variant or rule.variants[0]
    if variant not in rule.variants:
        raise ValueError(f"unknown variant {variant!r} for {rule_id}")
    kinds = variable_kinds(rule)
    pat_tpl = rule.pattern(IDENT, variant)
    rep_tpl = rule.replacement(IDENT, variant)
    used = set(template_variables(pat_tpl)) | set(template_variables(rep_tpl))
    for fn in (rule.prep_pattern, rule.prep_replacement):
        if fn is not None:
            used |= {
                w for p in fn(IDENT, variant) for w in p.wires if isinstance(w, str)
            }
    by_val: dict[tuple[str, object], str] = {}
    for var in sorted(used):
        if var not in bindings:
            raise ValueError(f"missing fresh wire binding for {var!r}")
        key = (kinds[var], bindings[var])
        other = by_val.get(key)
        if other is not None and frozenset({other, var}) not in rule.alias_ok:
            raise ValueError(f"non-injective binding: {other!r} and {var!r}")
        by_val[key] = var
    pat = ground(pat_tpl, bindings)
    rep = ground(rep_tpl, bindings)
    return (pat, rep) if direction == "forward" else (rep, pat)
