"""Rewrite engine: match rules modulo disjoint-support commutation, apply
rewrites with optional channel verification, simplify greedily, and record
derivation traces.

Matching is subsequence-based: the instructions of a pattern may be
interleaved with others, provided each interleaved instruction touches
wires disjoint from every later matched instruction, so the matched
subsequence can be gathered contiguously at its first index by commuting.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace as dc_replace
from itertools import permutations

from .circuit import (
    Circuit,
    Gate1,
    Gate2,
    ClassicalCtrl,
    ClassicalXor,
    Instruction,
    Measure,
    read_cbits,
    serialize,
    supports_disjoint,
    validate,
    wires,
    written_cbit,
)
from .equivalence import channel_equal
from .rules import (
    RULES,
    RewriteRule,
    IDENT,
    ground,
    ground_preps,
    template_side,
    template_variables,
    variable_kinds,
)
from .sim import extract_channel


class RewriteError(ValueError):
    """Match cannot be applied (stale site, failed condition, no fresh wire)."""


class VerificationError(RuntimeError):
    """A rewrite step failed its channel-equality check."""


@dataclass(frozen=True)
class Match:
    """A located rule occurrence: ordered body indices plus variable bindings.

    For insertion-style applications (empty matched side) `site` holds the
    single insertion position.
    """

    rule: str
    direction: str = "forward"
    site: tuple[int, ...] = ()
    bindings: tuple[tuple[str, int], ...] = ()
    variant: str = "default"

    @property
    def binding_map(self) -> dict[str, int]:
        return dict(self.bindings)

    def label(self) -> str:
        parts = [self.rule]
        if self.direction != "forward":
            parts.append("backward")
        if self.variant != "default":
            parts.append(f"[{self.variant}]")
        parts.append(f"@ {self.site}")
        if self.bindings:
            parts.append(
                "{" + ", ".join(f"{k}={v}" for k, v in sorted(self.bindings)) + "}"
            )
        return " ".join(parts)


def match(
    rule: str,
    direction: str = "forward",
    site: tuple[int, ...] = (),
    bindings: dict[str, int] | None = None,
    variant: str | None = None,
) -> Match:
    r = RULES[rule]
    return Match(
        rule,
        direction,
        tuple(site),
        tuple(sorted((bindings or {}).items())),
        variant or r.variants[0],
    )


# ----------------------------------------------------------------------
# Matching
# ----------------------------------------------------------------------


def _unify(
    tpl: Instruction,
    instr: Instruction,
    bindings: dict[str, int],
    kinds: dict[str, str],
    rule: RewriteRule,
) -> dict[str, int] | None:
    if type(tpl) is not type(instr):
        return None
    new = bindings
    for f in fields(tpl):
        want = getattr(tpl, f.name)
        have = getattr(instr, f.name)
        if f.name == "kind":
            if want != have:
                return None
            continue
        if isinstance(want, str):
            if want in new:
                if new[want] != have:
                    return None
                continue
            kind = kinds[want]
            for other, val in new.items():
                if (
                    kinds.get(other) == kind
                    and val == have
                    and frozenset({other, want}) not in rule.alias_ok
                ):
                    return None
            if new is bindings:
                new = dict(bindings)
            new[want] = have
        elif want != have:
            return None
    return new if new is not bindings else dict(bindings)


def _find_sites(
    c: Circuit,
    tpl: list[Instruction],
    kinds: dict[str, str],
    rule: RewriteRule,
    seed: dict[str, int],
) -> list[tuple[tuple[int, ...], dict[str, int]]]:
    """All gatherable occurrences of the template in body order."""
    body = c.body
    results: list[tuple[tuple[int, ...], dict[str, int]]] = []

    def extend(slot: int, pos: int, picked: list[int], skipped, bindings) -> None:
        if slot == len(tpl):
            results.append((tuple(picked), bindings))
            return
        sk = skipped
        for j in range(pos, len(body)):
            # instructions before the first matched index are not interleaved;
            # afterwards, a candidate must avoid every skipped instruction
            if slot == 0 or not (wires(body[j]) & sk):
                b2 = _unify(tpl[slot], body[j], bindings, kinds, rule)
                if b2 is not None:
                    extend(slot + 1, j + 1, picked + [j], sk, b2)
            if slot > 0:
                sk = sk | wires(body[j])

    extend(0, 0, [], frozenset(), dict(seed))
    return results


def _insertion_matches(
    c: Circuit, rule: RewriteRule, direction: str, variant: str
) -> list[Match]:
    dst_fn, dst_prep_fn = template_side(rule, direction, "dst")
    tpl = dst_fn(IDENT, variant)
    vars_needed = list(template_variables(tpl))
    if dst_prep_fn is not None:
        for p in dst_prep_fn(IDENT, variant):
            for w in p.wires:
                if isinstance(w, str) and w not in vars_needed:
                    vars_needed.append(w)
    kinds = variable_kinds(rule)
    qvars = [v for v in vars_needed if kinds[v] == "q"]
    cvars = [v for v in vars_needed if kinds[v] == "c"]
    out: list[Match] = []
    for pos in range(len(c.body) + 1):
        for qs in permutations(range(c.num_qubits), len(qvars)):
            for cs in permutations(range(c.num_cbits), len(cvars)):
                b = dict(zip(qvars, qs)) | dict(zip(cvars, cs))
                m = Match(
                    rule.id, direction, (pos,), tuple(sorted(b.items())), variant
                )
                if _check_applicable(c, m, allow_fresh=False) is None:
                    out.append(m)
    return out


def find_matches(c: Circuit, rule_id: str, direction: str = "forward") -> list[Match]:
    """All rule occurrences, ordered left to right by first matched index.

    Conditional rules only report sites whose static condition holds.
    """
    if rule_id not in RULES:
        raise KeyError(f"unknown rule id {rule_id!r}")
    rule = RULES[rule_id]
    if rule_id == "Commute":
        return [
            Match("Commute", "forward", (i,))
            for i in range(len(c.body) - 1)
            if supports_disjoint(c.body[i], c.body[i + 1])
        ]
    kinds = variable_kinds(rule)
    out: list[Match] = []
    for vi, variant in enumerate(rule.variants):
        src_fn, _ = template_side(rule, direction, "src")
        tpl = src_fn(IDENT, variant)
        if not tpl:
            out.extend(_insertion_matches(c, rule, direction, variant))
            continue
        for site, bindings in _find_sites(c, tpl, kinds, rule, {}):
            m = Match(
                rule.id, direction, site, tuple(sorted(bindings.items())), variant
            )
            if _check_applicable(c, m, allow_fresh=True) is None:
                out.append(m)
    out.sort(key=lambda m: (m.site, rule.variants.index(m.variant), m.bindings))
    return out


# ----------------------------------------------------------------------
# Rewriting
# ----------------------------------------------------------------------


def _gather_ok(c: Circuit, site: tuple[int, ...]) -> bool:
    matched = [(j, wires(c.body[j])) for j in site]
    lo, hi = site[0], site[-1]
    for j in range(lo, hi + 1):
        if j in site:
            continue
        skipped = wires(c.body[j])
        if any(skipped & w for k, w in matched if k > j):
            return False
    return True


def _allocate_fresh(
    c: Circuit, rule: RewriteRule, kinds: dict[str, str], bindings: dict[str, int],
    needed: list[str],
) -> tuple[dict[str, int], int]:
    """Bind replacement-only variables; returns bindings and new cbit count."""
    num_cbits = c.num_cbits
    b = dict(bindings)
    for var in needed:
        if var in b:
            continue
        if kinds[var] == "q":
            taken = {v for k, v in b.items() if kinds.get(k) == "q"}
            free = [w for w in range(c.num_qubits) if w not in taken]
            if not free:
                raise RewriteError(f"fresh-wire allocation failure for {var!r}")
            b[var] = free[0]
        else:
            used = set()
            for instr in c.body:
                used |= read_cbits(instr)
                w = written_cbit(instr)
                if w is not None:
                    used.add(w)
            used |= {v for k, v in b.items() if kinds.get(k) == "c"}
            free = [w for w in range(num_cbits) if w not in used]
            if free:
                b[var] = free[0]
            else:
                b[var] = num_cbits
                num_cbits += 1
    return b, num_cbits


def _check_applicable(c: Circuit, m: Match, allow_fresh: bool) -> str | None:
    """None if the match applies cleanly, else the reason it does not."""
    rule = RULES[m.rule]
    if m.variant not in rule.variants:
        return f"unknown variant {m.variant!r}"
    if m.rule == "Commute":
        i = m.site[0]
        if not (0 <= i < len(c.body) - 1):
            return "commute site out of range"
        if not supports_disjoint(c.body[i], c.body[i + 1]):
            return "adjacent instructions share support"
        return None
    kinds = variable_kinds(rule)
    bindings = m.binding_map
    src_fn, src_prep_fn = template_side(rule, m.direction, "src")
    tpl = src_fn(IDENT, m.variant)
    if tpl:
        if len(m.site) != len(tpl):
            return "site length does not match pattern"
        if any(not 0 <= j < len(c.body) for j in m.site) or list(m.site) != sorted(
            set(m.site)
        ):
            return "site indices invalid"
        grounded = ground(tpl, bindings)
        for j, want in zip(m.site, grounded):
            if c.body[j] != want:
                return f"instruction at {j} does not match pattern"
        if not _gather_ok(c, m.site):
            return "interleaved instructions block gathering"
    else:
        pos = m.site[0] if m.site else len(c.body)
        if not 0 <= pos <= len(c.body):
            return "insertion position out of range"
    if src_prep_fn is not None:
        for p in ground_preps(src_prep_fn(IDENT, m.variant), bindings):
            if p not in c.preps:
                return f"required prep {p} not present"
    if not allow_fresh:
        dst_fn, dst_prep_fn = template_side(rule, m.direction, "dst")
        needed = set(template_variables(dst_fn(IDENT, m.variant)))
        if dst_prep_fn is not None:
            for p in dst_prep_fn(IDENT, m.variant):
                needed |= {w for w in p.wires if isinstance(w, str)}
        if any(v not in bindings for v in needed):
            return "missing fresh wire binding"
    if rule.condition is not None:
        pos_site = m.site if m.site else (len(c.body),)
        return rule.condition(c, pos_site, bindings, m.variant, m.direction)
    return None


def rewrite_at(c: Circuit, m: Match, verify: bool = False) -> Circuit:
    """Apply a match: gather the matched instructions at the first site index
    and splice in the instantiated replacement. Preps and roles carry over.
    """
    reason = _check_applicable(c, m, allow_fresh=True)
    if reason is not None:
        raise RewriteError(f"{m.rule}: {reason}")
    if m.rule == "Commute":
        i = m.site[0]
        body = list(c.body)
        body[i], body[i + 1] = body[i + 1], body[i]
        new = dc_replace(c, body=tuple(body))
        validate(new)
        return _verified(c, new, verify)

    rule = RULES[m.rule]
    kinds = variable_kinds(rule)
    src_fn, src_prep_fn = template_side(rule, m.direction, "src")
    dst_fn, dst_prep_fn = template_side(rule, m.direction, "dst")
    dst_tpl = dst_fn(IDENT, m.variant)
    needed = list(template_variables(dst_tpl))
    if dst_prep_fn is not None:
        for p in dst_prep_fn(IDENT, m.variant):
            for w in p.wires:
                if isinstance(w, str) and w not in needed:
                    needed.append(w)
    bindings, num_cbits = _allocate_fresh(c, rule, kinds, m.binding_map, needed)

    # re-check the condition with fresh variables bound
    if rule.condition is not None:
        pos_site = m.site if m.site else (len(c.body),)
        reason = rule.condition(c, pos_site, bindings, m.variant, m.direction)
        if reason is not None:
            raise RewriteError(f"{m.rule}: {reason}")

    replacement = ground(dst_tpl, bindings)
    src_tpl = src_fn(IDENT, m.variant)
    body = list(c.body)
    if src_tpl:
        lo, hi = m.site[0], m.site[-1]
        skipped = [body[j] for j in range(lo, hi + 1) if j not in m.site]
        body = body[:lo] + replacement + skipped + body[hi + 1 :]
    else:
        pos = m.site[0] if m.site else len(body)
        body = body[:pos] + replacement + body[pos:]

    preps = list(c.preps)
    if src_prep_fn is not None:
        for p in ground_preps(src_prep_fn(IDENT, m.variant), bindings):
            preps.remove(p)
    if dst_prep_fn is not None:
        preps.extend(ground_preps(dst_prep_fn(IDENT, m.variant), bindings))

    new = Circuit(
        c.num_qubits,
        num_cbits,
        tuple(sorted(preps, key=lambda p: p.wires)),
        c.inputs,
        tuple(body),
        c.q_roles,
        c.c_roles + ("scratch",) * (num_cbits - c.num_cbits),
    )
    validate(new)
    return _verified(c, new, verify)


def _verified(old: Circuit, new: Circuit, verify: bool) -> Circuit:
    if verify and not channel_equal(extract_channel(old), extract_channel(new)):
        raise VerificationError("rewrite is not channel-preserving")
    return new


# ----------------------------------------------------------------------
# Derivation traces
# ----------------------------------------------------------------------


@dataclass
class TraceStep:
    label: str
    applied: Match | None
    circuit: Circuit
    verified: bool | None  # None when verification was off


@dataclass
class DerivationTrace:
    start: Circuit
    steps: list[TraceStep]

    @property
    def final(self) -> Circuit:
        return self.steps[-1].circuit if self.steps else self.start

    def render(self) -> str:
        def tag(v: bool | None) -> str:
            return "" if v is None else ("  VERIFIED" if v else "  FAILED")

        out = ["step 0: initial", _indent(serialize(self.start))]
        for k, step in enumerate(self.steps, start=1):
            out.append(f"step {k}: {step.label}{tag(step.verified)}")
            out.append(_indent(serialize(step.circuit)))
        return "\n".join(out)


def _indent(text: str) -> str:
    return "\n".join("    " + line for line in text.splitlines())


def apply_steps(c: Circuit, steps: list[Match], verify: bool = True) -> DerivationTrace:
    """Apply a scripted sequence of matches, verifying each against the start."""
    trace = DerivationTrace(c, [])
    start_channel = extract_channel(c) if verify else None
    current = c
    for m in steps:
        current = rewrite_at(current, m, verify=False)
        ok: bool | None = None
        if verify:
            ok = channel_equal(start_channel, extract_channel(current))
            if not ok:
                trace.steps.append(TraceStep(m.label(), m, current, False))
                raise VerificationError(f"step {m.label()} broke channel equality")
        trace.steps.append(TraceStep(m.label(), m, current, ok))
    return trace


# ----------------------------------------------------------------------
# Greedy simplification
# ----------------------------------------------------------------------

_SIMPLIFY_PRIORITY = (
    ("R1_InverseCancel", "forward"),
    ("R1_ControlZero", "forward"),
    ("R1_TargetPlus", "forward"),
    ("R3_DeferMeasure", "backward"),
    ("R4_XorSubstitute", "forward"),
)


def gate_measure(c: Circuit) -> tuple[int, int, int]:
    """Lexicographic cost: quantum gates, classically controlled gates, length."""
    q = sum(isinstance(i, (Gate1, Gate2)) for i in c.body)
    cc = sum(isinstance(i, ClassicalCtrl) for i in c.body)
    return (q, cc, len(c.body))


def _next_steps(c: Circuit) -> list[tuple[Match, Circuit]] | None:
    for rule_id, direction in _SIMPLIFY_PRIORITY:
        for m in find_matches(c, rule_id, direction):
            try:
                new = rewrite_at(c, m)
            except RewriteError:
                continue
            if gate_measure(new) < gate_measure(c):
                return [(m, new)]
    # R3 forward only when the deferred CNOT enables cancellations that
    # reduce the overall cost
    for m in find_matches(c, "R3_DeferMeasure", "forward"):
        try:
            t = rewrite_at(c, m)
        except RewriteError:
            continue
        seq = [(m, t)]
        while True:
            cancels = find_matches(t, "R1_InverseCancel", "forward")
            if not cancels:
                break
            t = rewrite_at(t, cancels[0])
            seq.append((cancels[0], t))
        if gate_measure(t) < gate_measure(c):
            return seq
    return None


def simplify(c: Circuit, verify: bool = True) -> tuple[Circuit, DerivationTrace]:
    """Greedy fixpoint of the null-gate and classical-substitution rules.

    Deterministic: fixed rule priority, leftmost match first. Every committed
    step strictly reduces (quantum gates, classically controlled gates,
    instruction count), so the loop terminates.
    """
    trace = DerivationTrace(c, [])
    start_channel = extract_channel(c) if verify else None
    current = c
    while True:
        steps = _next_steps(current)
        if steps is None:
            break
        for m, new in steps:
            ok: bool | None = None
            if verify:
                ok = channel_equal(start_channel, extract_channel(new))
                if not ok:
                    trace.steps.append(TraceStep(m.label(), m, new, False))
                    raise VerificationError(f"simplify step {m.label()} unsound")
            trace.steps.append(TraceStep(m.label(), m, new, ok))
            current = new
    return current, trace


# ----------------------------------------------------------------------
# Rule III canonicalization (measurement deferral)
# ----------------------------------------------------------------------


def defer_measurements(c: Circuit) -> Circuit:
    """Push measurements past the classically controlled gates they feed
    (turning those gates quantum), then bubble all measurements to the end.

    This is the Rule III canonical form used by the deferred-measurement
    cross-check; it fails if a measured wire is reused quantumly before a
    reader or a result feeds a classical XOR.
    """
    body = list(c.body)
    progress = True
    while progress:
        progress = False
        for i, instr in enumerate(body):
            if not isinstance(instr, Measure):
                continue
            mw, r = instr.target, instr.result
            for j in range(i + 1, len(body)):
                ins = body[j]
                if isinstance(ins, ClassicalCtrl) and ins.control == r:
                    between_ok = all(
                        mw not in {w.index for w in wires(body[k]) if w.kind == "q"}
                        and r not in read_cbits(body[k])
                        for k in range(i + 1, j)
                    )
                    if not between_ok:
                        break
                    kind = "CNOT" if ins.kind == "CX" else "CZ"
                    body = (
                        body[:i]
                        + body[i + 1 : j]
                        + [Gate2(kind, mw, ins.target), Measure(mw, r)]
                        + body[j + 1 :]
                    )
                    progress = True
                    break
                if isinstance(ins, ClassicalXor) and r in (ins.a, ins.b):
                    break
            if progress:
                break
    moved = True
    while moved:
        moved = False
        for i in range(len(body) - 1):
            if (
                isinstance(body[i], Measure)
                and not isinstance(body[i + 1], Measure)
                and supports_disjoint(body[i], body[i + 1])
            ):
                body[i], body[i + 1] = body[i + 1], body[i]
                moved = True
    new = dc_replace(c, body=tuple(body))
    validate(new)
    return new
