"""Max-plus weighted automata with weights in {-inf, 0, 1}, and the
counter-machine reduction: a checker automaton and trace language such
that the checker scores more than half the trace length exactly on the
defective traces, plus the derived automata used by the tree
constructions and their bounded equivalence search.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from . import minsky as mk
from .automata import (
    PAD,
    Alphabet,
    Nfa,
    alphabet,
    as_word,
    complement,
    concat_nfa,
    determinize,
    language_upto,
    literal_nfa,
    plus_nfa,
    star_nfa,
    union_nfa,
    _skey,
)

NEG_INF = None  # weight of absent transitions


class EmptyWord(ValueError):
    """Behaviors are defined on nonempty words only."""


def _mp_max(a, b):
    if a is NEG_INF:
        return b
    if b is NEG_INF:
        return a
    return a if a >= b else b


def _mp_add(a, b):
    if a is NEG_INF or b is NEG_INF:
        return NEG_INF
    return a + b


@dataclass(frozen=True)
class WeightedAutomaton:
    """States, alphabet, one initial state, final states, and a partial
    weight map (state, symbol, state) -> {0, 1}; absent means -inf."""

    states: frozenset
    alphabet: Alphabet
    initial: object
    finals: frozenset
    weights: tuple  # of ((src, sym, dst), weight)

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "finals", frozenset(self.finals))
        object.__setattr__(self, "weights", tuple(sorted(self.weights, key=_skey)))
        if self.initial not in self.states:
            raise ValueError("initial state not declared")
        if not self.finals <= self.states:
            raise ValueError("final states not declared")
        for ((src, sym, dst), w) in self.weights:
            if src not in self.states or dst not in self.states:
                raise ValueError("weight endpoint not declared")
            if sym not in self.alphabet:
                raise ValueError("weight symbol %r not in alphabet" % (sym,))
            if w not in (0, 1):
                raise ValueError("transition weights are 0 or 1")

    @cached_property
    def weight_map(self):
        return dict(self.weights)

    @cached_property
    def _delta(self):
        d = {}
        for ((src, sym, dst), w) in self.weights:
            d.setdefault(src, {}).setdefault(sym, []).append((dst, w))
        return d

    def step_vector(self, vec, sym):
        """One max-plus matrix-vector step on a sparse value vector."""
        out = {}
        for q, val in vec.items():
            for (dst, w) in self._delta.get(q, {}).get(sym, ()):
                cand = val + w
                if dst not in out or out[dst] < cand:
                    out[dst] = cand
        return out

    def final_value(self, vec):
        best = NEG_INF
        for q in self.finals:
            if q in vec:
                best = _mp_max(best, vec[q])
        return best


def behavior(wa, w):
    """Maximal weight of an accepting run on ``w``; -inf (None) when no
    run exists.  Computed by max-plus matrix products."""
    w = as_word(w)
    if not w:
        raise EmptyWord("behavior is defined on nonempty words")
    vec = {wa.initial: 0}
    for sym in w:
        vec = wa.step_vector(vec, sym)
        if not vec:
            return NEG_INF
    return wa.final_value(vec)


def enumerate_runs(wa, w):
    """All accepting runs with their weights (oracle for behavior)."""
    w = as_word(w)
    if not w:
        raise EmptyWord("runs are defined on nonempty words")
    runs = []

    def go(q, i, acc, weight):
        if i == len(w):
            if q in wa.finals:
                runs.append((tuple(acc), weight))
            return
        for (dst, wt) in sorted(wa._delta.get(q, {}).get(w[i], ()), key=_skey):
            go(dst, i + 1, acc + [(q, w[i], dst)], weight + wt)

    go(wa.initial, 0, [], 0)
    return runs


def weighted_union(parts):
    """Max of behaviors, via a fresh initial state (no epsilon moves)."""
    parts = list(parts)
    sigma = parts[0].alphabet
    init = ("u", 0)
    states = {init}
    weights = []
    finals = set()
    for i, wa in enumerate(parts):
        if wa.alphabet != sigma:
            raise ValueError("union over different alphabets")
        tag = lambda q, i=i: ("c%d" % i, q)
        states |= {tag(q) for q in wa.states}
        for ((src, sym, dst), w) in wa.weights:
            weights.append(((tag(src), sym, tag(dst)), w))
            if src == wa.initial:
                weights.append(((init, sym, tag(dst)), w))
        finals |= {tag(f) for f in wa.finals}
    return WeightedAutomaton(frozenset(states), sigma, init, frozenset(finals), tuple(weights))


# ---------------------------------------------------------------------------
# Trace checker construction


def state_symbol(q):
    return "q:%s" % q


START, BOX = "^", "_"


def krob_alphabet(machine):
    syms = (START, BOX, "a", "b") + tuple(sorted(state_symbol(q) for q in machine.states))
    return Alphabet(syms)


def _interleave_box_nfa(nfa):
    """Image of the language under sigma -> sigma box."""
    states = {("s", q) for q in nfa.states}
    trans = set()
    for (src, sym, dst) in nfa.transitions:
        mid = ("m", (src, sym, dst))
        states.add(mid)
        trans.add((("s", src), sym, mid))
        trans.add((mid, BOX, ("s", dst)))
    return Nfa(
        nfa.alphabet,
        frozenset(states),
        ("s", nfa.initial),
        frozenset(trans),
        frozenset(("s", f) for f in nfa.finals),
    )


def trace_language(machine):
    """The regular language of claimed accepting traces, box-interleaved.

    A payload is start-marked blocks: the input block (a-run then the
    initial state's symbol) followed by configuration blocks a* b* q̂,
    the last of which carries the accepting state's symbol.
    """
    sigma = krob_alphabet(machine)
    lit = lambda w: literal_nfa(sigma, w)
    astar = star_nfa(lit("a"))
    bstar = star_nfa(lit("b"))
    first = concat_nfa(concat_nfa(lit(START), astar), lit((state_symbol(machine.initial),)))
    block_any = None
    for q in sorted(machine.states):
        blk = concat_nfa(
            concat_nfa(concat_nfa(lit(START), astar), bstar),
            lit((state_symbol(q),)),
        )
        block_any = blk if block_any is None else union_nfa(block_any, blk)
    last = concat_nfa(
        concat_nfa(concat_nfa(lit(START), astar), bstar),
        lit((state_symbol(machine.accepting),)),
    )
    payload = concat_nfa(first, concat_nfa(star_nfa(block_any), last))
    if machine.initial == machine.accepting:
        payload = union_nfa(payload, first)
    return _interleave_box_nfa(payload)


def encode_trace(machine, input_value, fuel=10_000):
    """The box-interleaved word of the real computation, when accepting."""
    trace, status = mk.run_trace(machine, input_value, fuel)
    if status != mk.HALTED or trace[-1].state != machine.accepting:
        return None
    payload = []
    first = trace[0]
    payload += [START] + ["a"] * first.c1 + [state_symbol(first.state)]
    for cfg in trace[1:]:
        payload += [START] + ["a"] * cfg.c1 + ["b"] * cfg.c2 + [state_symbol(cfg.state)]
    out = []
    for sym in payload:
        out += [sym, BOX]
    return tuple(out)


class _PayloadBuilder:
    """Weighted transitions at payload-letter granularity: every letter
    carries a letter weight and a weight for the box that follows it."""

    def __init__(self, det_id):
        self.det_id = det_id
        self.rules = []

    def add(self, src, sym, dst, wl, wb):
        self.rules.append(((self.det_id, src), sym, (self.det_id, dst), wl, wb))


def _window_detector(det_id, sigma, state_syms, cfg):
    """A defect detector: skip with box-weight 1, scan the chosen block
    pair with region weights from ``cfg``, then skip to the end.

    cfg keys: t_a ('zero'|'pos'|'any'), t_b, t_state (symbol set),
    t1_scan (bool), t1_state (symbol set), w (region -> (wl, wb)).
    """
    w = {
        "t_hat": (0, 1),
        "t_a": (0, 1),
        "t_b": (0, 1),
        "t_state": (0, 1),
        "t1_hat": (0, 1),
        "t1_a": (0, 1),
        "t1_b": (0, 1),
        "t1_state": (0, 1),
    }
    w.update(cfg.get("w", {}))
    letters = [s for s in sigma.symbols if s != BOX]
    b = _PayloadBuilder(det_id)
    for s in letters:
        b.add("skip", s, "skip", 0, 1)
        b.add("trail", s, "trail", 0, 1)
    b.add("skip", START, "tA0", *w["t_hat"])
    b.add("tA0", "a", "tA1", *w["t_a"])
    b.add("tA1", "a", "tA1", *w["t_a"])
    a_exits = {"zero": ["tA0"], "pos": ["tA1"], "any": ["tA0", "tA1"]}[cfg["t_a"]]
    for src in a_exits:
        b.add(src, "b", "tB1", *w["t_b"])
    b.add("tB1", "b", "tB1", *w["t_b"])
    b_exits = {"zero": a_exits, "pos": ["tB1"], "any": a_exits + ["tB1"]}[cfg["t_b"]]
    for src in dict.fromkeys(b_exits):
        for q in cfg["t_state"]:
            b.add(src, q, "tQ", *w["t_state"])
    if cfg["t1_scan"]:
        b.add("tQ", START, "t1A", *w["t1_hat"])
        b.add("t1A", "a", "t1A", *w["t1_a"])
        b.add("t1A", "b", "t1B", *w["t1_b"])
        b.add("t1B", "b", "t1B", *w["t1_b"])
        for src in ("t1A", "t1B"):
            for q in cfg["t1_state"]:
                b.add(src, q, "trail", *w["t1_state"])
    else:
        b.add("tQ", START, "trail", *w["t1_hat"])
    return b.rules, (det_id, "skip"), {(det_id, "trail")}


def _machine_detectors(machine, sigma):
    """One detector per defect kind: a step taken from a halting state, a
    wrong successor state, or a counter count off by at least one in
    either direction.  Counter detectors score strictly more than half
    the trace exactly when the inequality they target is real."""
    state_syms = [state_symbol(q) for q in sorted(machine.states)]
    detectors = []
    for q in sorted(machine.states):
        ins = machine.instructions[q]
        qsym = state_symbol(q)
        if isinstance(ins, mk.Halt):
            detectors.append(
                (
                    "halt[%s]" % q,
                    {
                        "t_a": "any",
                        "t_b": "any",
                        "t_state": [qsym],
                        "t1_scan": False,
                        "t1_state": [],
                        "w": {"t_hat": (1, 1)},
                    },
                )
            )
            continue
        if isinstance(ins, mk.Inc):
            branches = [("step", "any", "any", ins.next,
                         (+1, 0) if ins.counter == 1 else (0, +1))]
        else:
            if ins.counter == 1:
                branches = [
                    ("pos", "pos", "any", ins.next_pos, (-1, 0)),
                    ("zero", "zero", "any", ins.next_zero, (0, 0)),
                ]
            else:
                branches = [
                    ("pos", "any", "pos", ins.next_pos, (0, -1)),
                    ("zero", "any", "zero", ins.next_zero, (0, 0)),
                ]
        for (tag, cond_a, cond_b, expected, (d1, d2)) in branches:
            base = {"t_a": cond_a, "t_b": cond_b, "t_state": [qsym], "t1_scan": True}
            detectors.append(
                (
                    "state[%s,%s]" % (q, tag),
                    dict(
                        base,
                        t1_state=[s for s in state_syms if s != state_symbol(expected)],
                        w={"t_hat": (1, 1)},
                    ),
                )
            )
            for (counter, d) in ((1, d1), (2, d2)):
                reg_t = "t_a" if counter == 1 else "t_b"
                reg_t1 = "t1_a" if counter == 1 else "t1_b"
                # greater defect: next count > current + d
                wcfg = {reg_t: (0, 0), reg_t1: (1, 1)}
                if d == 1:
                    wcfg["t_hat"] = (0, 0)
                elif d == -1:
                    wcfg["t_hat"] = (1, 1)
                detectors.append(
                    (
                        "gt[%s,%s,c%d]" % (q, tag, counter),
                        dict(base, t1_state=list(state_syms), w=wcfg),
                    )
                )
                # less defect: next count < current + d
                wcfg = {reg_t1: (0, 0), reg_t: (1, 1)}
                if d == 1:
                    wcfg["t_hat"] = (1, 1)
                elif d == -1:
                    wcfg["t_hat"] = (0, 0)
                detectors.append(
                    (
                        "lt[%s,%s,c%d]" % (q, tag, counter),
                        dict(base, t1_state=list(state_syms), w=wcfg),
                    )
                )
    return detectors


def _interleave_weighted(rules, initial, finals, sigma):
    """Expand payload-level weighted rules into letter/box transitions."""
    weights = []
    states = {initial} | set(finals)
    for (src, sym, dst, wl, wb) in rules:
        mid = ("mid", (src, sym, dst))
        states |= {src, dst, mid}
        weights.append(((src, sym, mid), wl))
        weights.append(((mid, BOX, dst), wb))
    return states, weights


@dataclass(frozen=True)
class KrobBundle:
    """Checker automaton, its trace language, alphabet, and the machine."""

    A: WeightedAutomaton
    ctReg: Nfa
    sigma: Alphabet
    machine: mk.MinskyMachine


def krob_checker(machine):
    """The checker: its behavior exceeds half the length on every trace
    of a given input exactly when the input is not accepted; on words
    that are not box-interleaved the behavior is 0."""
    sigma = krob_alphabet(machine)
    all_states = set()
    all_weights = []
    comp_initials = []
    finals = set()
    # copy component: weight 0 on every nonempty word
    copy = ("copy", "c")
    all_states.add(copy)
    for s in sigma.symbols:
        all_weights.append(((copy, s, copy), 0))
    comp_initials.append((copy, True))
    finals.add(copy)
    for det_id, cfg in _machine_detectors(machine, sigma):
        rules, init, det_finals = _window_detector(det_id, sigma, None, cfg)
        states, weights = _interleave_weighted(rules, init, det_finals, sigma)
        all_states |= states
        all_weights += weights
        comp_initials.append((init, False))
        finals |= det_finals
    root = ("root", 0)
    all_states.add(root)
    out = []
    for (init, include_self) in comp_initials:
        for ((src, sym, dst), w) in all_weights:
            if src == init:
                out.append(((root, sym, dst), w))
    # copy component's self loop from the root
    all_weights += out
    A = WeightedAutomaton(
        frozenset(all_states | {root}),
        sigma,
        root,
        frozenset(finals),
        tuple(all_weights),
    )
    return KrobBundle(A, trace_language(machine), sigma, machine)


def lift_counter(sigma):
    """Behavior floor(|u|/2) + 1 on every nonempty word."""
    states = frozenset({"s", "odd", "even"})
    weights = []
    for s in sigma.symbols:
        weights.append((("s", s, "odd"), 1))
        weights.append((("odd", s, "even"), 1))
        weights.append((("even", s, "odd"), 0))
    return WeightedAutomaton(states, sigma, "s", frozenset({"odd", "even"}), tuple(weights))


def lift_A_M(bundle):
    """max(floor(|u|/2)+1, checker behavior), as one automaton."""
    return weighted_union([bundle.A, lift_counter(bundle.sigma)])


# ---------------------------------------------------------------------------
# The pair-alphabet automaton and its specializations


def pair_alphabet(sigma):
    syms = [
        (x, y)
        for x in (PAD,) + tuple(sigma.symbols)
        for y in (PAD,) + tuple(sigma.symbols)
        if not (x == PAD and y == PAD)
    ]
    return Alphabet(tuple(syms))


def marker_word(m):
    """The second track of a specialized pair: start, box, then m a-box
    groups."""
    return (START, BOX) + ("a", BOX) * m


def marker_shape_nfa(sigma):
    lit = lambda w: literal_nfa(sigma, w)
    return concat_nfa(lit((START, BOX)), star_nfa(lit(("a", BOX))))


class _TrackCheck:
    """Boolean scanner running an Nfa on one track of a pair word."""

    def __init__(self, nfa, slot):
        self.nfa = nfa
        self.slot = slot
        self.initial = ("run", frozenset({nfa.initial}))

    def step(self, state, sym):
        letter = sym[self.slot]
        kind, data = state
        if kind == "done":
            return [state] if letter == PAD else []
        if letter == PAD:
            return [("done", None)] if data & self.nfa.finals else []
        nxt = set()
        for q in data:
            nxt |= self.nfa._delta.get(q, {}).get(letter, set())
        return [("run", frozenset(nxt))] if nxt else []

    def is_final(self, state):
        kind, data = state
        return kind == "done" or bool(data & self.nfa.finals)


class _MarkerMatchScanner:
    """Accepts pairs whose marker track equals the start-box prefix of the
    first track with a maximal a-run (exactly the matched case)."""

    initial = "c0"

    def step(self, state, sym):
        x, y = sym
        if state == "c0":
            return ["c1"] if (x, y) == (START, START) else []
        if state == "c1":
            return ["c2"] if (x, y) == (BOX, BOX) else []
        if state == "c2":
            if (x, y) == ("a", "a"):
                return ["c3"]
            if y == PAD and x not in ("a", PAD):
                return ["cd"]
            return []
        if state == "c3":
            return ["c2"] if (x, y) == (BOX, BOX) else []
        if state == "cd":
            return ["cd"] if y == PAD else []
        return []

    def is_final(self, state):
        return state == "cd"


class _MarkerMismatchScanner:
    """Accepts pairs whose marker track diverges from the first track's
    start-box prefix, or stops before the a-run does (given both shapes)."""

    initial = "c0"

    def step(self, state, sym):
        x, y = sym
        if state == "bad":
            return ["bad"]
        if state == "c0":
            return ["c1"] if (x, y) == (START, START) else []
        if state == "c1":
            return ["c2"] if (x, y) == (BOX, BOX) else []
        if state == "c2":
            if (x, y) == ("a", "a"):
                return ["c3"]
            if x == "a" and y != "a":
                return ["bad"]
            if x != "a" and y == "a":
                return ["bad"]
            return []
        if state == "c3":
            if (x, y) == (BOX, BOX):
                return ["c2"]
            if y == PAD:
                return ["bad"]
            return []
        return []

    def is_final(self, state):
        return state == "bad"


def weighted_track_product(wa, slot, checkers, psigma):
    """Weighted automaton over pair symbols: the behavior of ``wa`` on the
    chosen track, gated by boolean checkers over the full pair symbols.

    The tracked word may end before the pair word does; the remaining
    #-padded steps carry weight 0 and require the weighted component to
    have accepted already.
    """
    init = (("run", wa.initial), tuple(c.initial for c in checkers))
    seen = {init}
    todo = [init]
    weights = []
    finals = set()

    def wa_moves(wstate, letter):
        kind, q = wstate
        if kind == "done":
            return [(("done", q), 0)] if letter == PAD else []
        if letter == PAD:
            return [(("done", None), 0)] if q in wa.finals else []
        return [((("run", dst)), w) for (dst, w) in wa._delta.get(q, {}).get(letter, ())]

    while todo:
        state = todo.pop()
        (wstate, cstates) = state
        for sym in psigma.symbols:
            for (nw, w) in wa_moves(wstate, sym[slot]):
                ncs = []
                dead = False
                for c, cs in zip(checkers, cstates):
                    nxt = list(c.step(cs, sym))
                    if not nxt:
                        dead = True
                        break
                    if len(nxt) > 1:
                        raise ValueError("checkers must be deterministic")
                    ncs.append(nxt[0])
                if dead:
                    continue
                nstate = (nw, tuple(ncs))
                weights.append(((state, sym, nstate), w))
                if nstate not in seen:
                    seen.add(nstate)
                    todo.append(nstate)
    for state in seen:
        (wstate, cstates) = state
        kind, q = wstate
        ok = kind == "done" or q in wa.finals
        if ok and all(c.is_final(cs) for c, cs in zip(checkers, cstates)):
            finals.add(state)
    return WeightedAutomaton(frozenset(seen), psigma, init, frozenset(finals), tuple(weights))


def _zero_catchall(psigma):
    states = frozenset({"z"})
    weights = tuple((("z", s, "z"), 0) for s in psigma.symbols)
    return WeightedAutomaton(states, psigma, "z", frozenset({"z"}), weights)


def build_B_M(bundle, aM):
    """The pair automaton: checker behavior on matched (trace, marker)
    pairs, the lifted behavior on unmatched marker-shaped pairs, zero
    otherwise."""
    sigma = bundle.sigma
    psigma = pair_alphabet(sigma)
    shape = marker_shape_nfa(sigma)
    ct_dfa = determinize(bundle.ctReg, complete=True)
    ct_co = complement(bundle.ctReg)
    matched = weighted_track_product(
        bundle.A,
        0,
        [_TrackCheck(ct_dfa, 0), _TrackCheck(shape, 1), _MarkerMatchScanner()],
        psigma,
    )
    unmatched_not_ct = weighted_track_product(
        aM, 0, [_TrackCheck(ct_co, 0), _TrackCheck(shape, 1)], psigma
    )
    unmatched_wrong_m = weighted_track_product(
        aM,
        0,
        [_TrackCheck(ct_dfa, 0), _TrackCheck(shape, 1), _MarkerMismatchScanner()],
        psigma,
    )
    return weighted_union(
        [matched, unmatched_not_ct, unmatched_wrong_m, _zero_catchall(psigma)]
    )


def pair_word(u, v):
    """The convolution of two plain words as a pair-symbol word."""
    u, v = as_word(u), as_word(v)
    n = max(len(u), len(v))
    return tuple(
        (u[i] if i < len(u) else PAD, v[i] if i < len(v) else PAD) for i in range(n)
    )


def r_value(bM, m, u):
    """Behavior of the pair automaton on u convolved with the m marker."""
    return behavior(bM, pair_word(u, marker_word(m)))


def specialize(bM, m, sigma):
    """One-track automaton with the marker fixed: its behavior on u equals
    the pair automaton's on u ⊗ marker(m).

    Weight that the pair automaton would earn on the marker's overhang
    (when the marker is longer than u) is banked: runs may emit weight
    early, and acceptance requires the bank to match an achievable
    overhang weight exactly.
    """
    v = marker_word(m)
    cap = len(v)
    tails = {}

    def tail_weights(q, pos):
        if (q, pos) in tails:
            return tails[(q, pos)]
        if pos >= len(v):
            out = frozenset({0}) if q in bM.finals else frozenset()
        else:
            acc = set()
            for (dst, w) in bM._delta.get(q, {}).get((PAD, v[pos]), ()):
                for t in tail_weights(dst, pos + 1):
                    acc.add(w + t)
            out = frozenset(acc)
        tails[(q, pos)] = out
        return out

    init = (bM.initial, 0, 0)
    seen = {init}
    todo = [init]
    weights = []
    while todo:
        (q, pos, bank) = todo.pop()
        for sym in sigma.symbols:
            marker_sym = v[pos] if pos < len(v) else PAD
            for (dst, w) in bM._delta.get(q, {}).get((sym, marker_sym), ()):
                npos = min(pos + 1, len(v))
                for emit in (0, 1):
                    nbank = bank + emit - w
                    if not (0 <= nbank <= cap):
                        continue
                    nstate = (dst, npos, nbank)
                    weights.append((((q, pos, bank), sym, nstate), emit))
                    if nstate not in seen:
                        seen.add(nstate)
                        todo.append(nstate)
    finals = frozenset(
        (q, pos, bank) for (q, pos, bank) in seen if bank in tail_weights(q, pos)
    )
    return WeightedAutomaton(frozenset(seen), sigma, init, finals, tuple(weights))


def wa_trim(wa):
    """Restrict to states on some accepting run (behavior unchanged)."""
    fwd = {}
    bwd = {}
    for ((src, sym, dst), w) in wa.weights:
        fwd.setdefault(src, set()).add(dst)
        bwd.setdefault(dst, set()).add(src)
    reach = {wa.initial}
    todo = [wa.initial]
    while todo:
        q = todo.pop()
        for p in fwd.get(q, ()):
            if p not in reach:
                reach.add(p)
                todo.append(p)
    co = set(wa.finals)
    todo = list(wa.finals)
    while todo:
        q = todo.pop()
        for p in bwd.get(q, ()):
            if p not in co:
                co.add(p)
                todo.append(p)
    live = reach & co
    if wa.initial not in live:
        live = live | {wa.initial}
    return WeightedAutomaton(
        frozenset(live),
        wa.alphabet,
        wa.initial,
        wa.finals & live,
        tuple(
            ((src, sym, dst), w)
            for ((src, sym, dst), w) in wa.weights
            if src in live and dst in live
        ),
    )


def wa_reduce(wa):
    """Merge forward-bisimilar states (same finality and identical
    (symbol, weight, successor-class) sets); behavior-preserving."""
    wa = wa_trim(wa)
    block = {q: (q in wa.finals) for q in wa.states}
    out = {}
    for ((src, sym, dst), w) in wa.weights:
        out.setdefault(src, set()).add((sym, w, dst))
    while True:
        sig = {}
        for q in wa.states:
            sig[q] = (
                block[q],
                frozenset((sym, w, block[dst]) for (sym, w, dst) in out.get(q, ())),
            )
        classes = {}
        for q in sorted(wa.states, key=_skey):
            classes.setdefault(sig[q], len(classes))
        new = {q: classes[sig[q]] for q in wa.states}
        if len(set(new.values())) == len(set(block.values())):
            block = new
            break
        block = new
    weights = {}
    for ((src, sym, dst), w) in wa.weights:
        key = (block[src], sym, block[dst])
        weights[key] = max(weights.get(key, w), w)
    return WeightedAutomaton(
        frozenset(block.values()),
        wa.alphabet,
        block[wa.initial],
        frozenset(block[f] for f in wa.finals),
        tuple(weights.items()),
    )


# ---------------------------------------------------------------------------
# Bounded equivalence


EQUAL = "equal"


@dataclass(frozen=True)
class Counterexample:
    word: tuple
    values: tuple


def _normalize_vectors(vecs):
    best = NEG_INF
    for vec in vecs:
        for val in vec.values():
            best = _mp_max(best, val)
    if best is NEG_INF:
        return tuple(() for _ in vecs)
    return tuple(
        tuple(sorted((q, val - best) for q, val in vec.items())) for vec in vecs
    )


def joint_walk(autos, max_len, visit, extra_keys=None):
    """Breadth-first walk over input words in llex order, memoizing on the
    shift-normalized joint weight vectors (plus optional extra state).

    ``visit(word, vectors)`` is called once per distinct memo node; since
    every judgment the callers make is invariant under a common weight
    shift and depends only on the node, visiting one llex-least
    representative per node covers all words up to the bound.
    """
    sigma = autos[0].alphabet
    start = tuple({wa.initial: 0} for wa in autos)
    seen = set()
    frontier = [((), start)]
    for _length in range(max_len):
        nxt = []
        for (word, vecs) in frontier:
            for sym in sigma.symbols:
                nvecs = tuple(wa.step_vector(vec, sym) for wa, vec in zip(autos, vecs))
                if all(not v for v in nvecs):
                    continue
                nword = word + (sym,)
                key = _normalize_vectors(nvecs)
                if extra_keys is not None:
                    key = (key, extra_keys(nword))
                if key in seen:
                    continue
                seen.add(key)
                stop = visit(nword, nvecs)
                if stop:
                    return stop
                nxt.append((nword, nvecs))
        frontier = nxt
    return None


def bounded_equiv(wa1, wa2, max_len):
    """Exhaustive behavior comparison on nonempty words up to ``max_len``;
    the first counterexample in llex order, else EQUAL."""
    if wa1.alphabet != wa2.alphabet:
        raise ValueError("equivalence over different alphabets")

    def visit(word, vecs):
        v1 = wa1.final_value(vecs[0])
        v2 = wa2.final_value(vecs[1])
        if v1 != v2:
            return Counterexample(word, (v1, v2))
        return None

    result = joint_walk([wa1, wa2], max_len, visit)
    return result if result is not None else EQUAL


def bounded_equiv_naive(wa1, wa2, max_len):
    """Word-by-word oracle for bounded_equiv (small bounds only)."""
    for n in range(1, max_len + 1):
        for w in itertools.product(wa1.alphabet.symbols, repeat=n):
            b1, b2 = behavior(wa1, w), behavior(wa2, w)
            if b1 != b2:
                return Counterexample(w, (b1, b2))
    return EQUAL


# ---------------------------------------------------------------------------
# Serialization


def wa_to_json(wa):
    from .automata import _sym_to_json

    states = sorted(wa.states, key=_skey)
    names = {q: i for i, q in enumerate(states)}
    return {
        "alphabet": [_sym_to_json(s) for s in wa.alphabet.symbols],
        "states": sorted(names.values()),
        "initial": names[wa.initial],
        "finals": sorted(names[f] for f in wa.finals),
        "weights": sorted(
            [names[src], _sym_to_json(sym), names[dst], w]
            for ((src, sym, dst), w) in wa.weights
        ),
    }


def wa_from_json(obj):
    from .automata import _sym_from_json

    sigma = Alphabet(tuple(_sym_from_json(s) for s in obj["alphabet"]))
    return WeightedAutomaton(
        frozenset(obj["states"]),
        sigma,
        obj["initial"],
        frozenset(obj["finals"]),
        tuple(
            ((src, _sym_from_json(sym), dst), w)
            for (src, sym, dst, w) in obj["weights"]
        ),
    )
