"""Machinery for automata over convolutions: scanners for the order and
(in)equality relations on padded tracks, lazy multi-track products, and
projections.

A k-track word is a sequence of k-tuples over base symbols and ``#``,
never all-#, with each track's padding confined to a suffix.  Components
of a product read a subset of the tracks; a component whose tracks have
all ended sits in a DONE state and only re-checks that they stay ended.
"""
from __future__ import annotations

from dataclasses import dataclass

from .automata import PAD, Alphabet, Nfa, alphabet, _skey

DONE = "⊥done"


class Scanner:
    """Duck-typed automaton with on-the-fly transitions.

    Subclasses define ``initial``, ``step(state, sym) -> iterable`` and
    ``is_final(state) -> bool``.
    """

    initial = None

    def step(self, state, sym):  # pragma: no cover - interface
        raise NotImplementedError

    def is_final(self, state):  # pragma: no cover - interface
        raise NotImplementedError


class NfaScanner(Scanner):
    def __init__(self, nfa):
        self.nfa = nfa
        self.initial = nfa.initial

    def step(self, state, sym):
        return self.nfa._delta.get(state, {}).get(sym, ())

    def is_final(self, state):
        return state in self.nfa.finals


class PrefixLtScanner(Scanner):
    """Accepts x ⊗ y with x a proper prefix of y."""

    initial = "eq"

    def step(self, state, sym):
        a, b = sym
        if state == "lt":
            return ("lt",)
        if a == PAD and b != PAD:
            return ("lt",)
        if a == b and a != PAD:
            return ("eq",)
        return ()

    def is_final(self, state):
        return state == "lt"


class LexLtScanner(Scanner):
    """Accepts x ⊗ y with x strictly lex-below y (prefixes are below)."""

    initial = "eq"

    def __init__(self, sigma):
        self.sigma = alphabet(sigma)

    def step(self, state, sym):
        a, b = sym
        if state == "lt":
            return ("lt",)
        if a == PAD and b == PAD:
            return ("eq",)
        if a == PAD:
            return ("lt",)
        if b == PAD:
            return ()
        c = self.sigma.cmp(a, b)
        if c < 0:
            return ("lt",)
        if c == 0:
            return ("eq",)
        return ()

    def is_final(self, state):
        return state == "lt"


class LlexLtScanner(Scanner):
    """Accepts x ⊗ y with x strictly below y length-lexicographically."""

    initial = "eq"

    def __init__(self, sigma):
        self.sigma = alphabet(sigma)

    def step(self, state, sym):
        a, b = sym
        if state == "lenlt":
            return ("lenlt",) if a == PAD else ()
        if a == PAD and b != PAD:
            return ("lenlt",)
        if b == PAD and a != PAD:
            return ()
        if a == PAD and b == PAD:
            return (state,)
        if state == "eq":
            c = self.sigma.cmp(a, b)
            return ({-1: "lt", 0: "eq", 1: "gt"}[c],)
        return (state,)

    def is_final(self, state):
        return state in ("lt", "lenlt")


def _inner_letters(x):
    """Track letters of a possibly-# pair symbol of a 2-track element."""
    if x == PAD:
        return (PAD, PAD)
    return x


class Lex2LtScanner(Scanner):
    """Accepts X ⊗ Y over pairs of convolution words: first tracks compared
    lexicographically, ties broken by the second tracks."""

    initial = ("eq", "eq")

    def __init__(self, sigma):
        self.sigma = alphabet(sigma)

    def _lex_step(self, s, a, b):
        if s != "eq":
            return s
        if a == PAD and b == PAD:
            return "eq"
        if a == PAD:
            return "lt"
        if b == PAD:
            return "gt"
        c = self.sigma.cmp(a, b)
        return {-1: "lt", 0: "eq", 1: "gt"}[c]

    def step(self, state, sym):
        X, Y = sym
        x1, x2 = _inner_letters(X)
        y1, y2 = _inner_letters(Y)
        s1, s2 = state
        return ((self._lex_step(s1, x1, y1), self._lex_step(s2, x2, y2)),)

    def is_final(self, state):
        s1, s2 = state
        return s1 == "lt" or (s1 == "eq" and s2 == "lt")


class EqScanner(Scanner):
    """Accepts x ⊗ y with x = y (no padding can occur)."""

    initial = "eq"

    def step(self, state, sym):
        a, b = sym
        return ("eq",) if (a == b and a != PAD) else ()

    def is_final(self, state):
        return state == "eq"


class NeqScanner(Scanner):
    """Accepts x ⊗ y with x ≠ y."""

    initial = "eq"

    def step(self, state, sym):
        if state == "neq":
            return ("neq",)
        a, b = sym
        return ("eq",) if a == b else ("neq",)

    def is_final(self, state):
        return state == "neq"


class MalformedScanner(Scanner):
    """Accepts 2-track words where some track resumes after padding."""

    initial = (False, False)

    def step(self, state, sym):
        if state == "bad":
            return ("bad",)
        e1, e2 = state
        a, b = sym
        if (e1 and a != PAD) or (e2 and b != PAD):
            return ("bad",)
        return ((e1 or a == PAD, e2 or b == PAD),)

    def is_final(self, state):
        return state == "bad"


def lt_scanner(kind, sigma):
    if kind == "pref":
        return PrefixLtScanner()
    if kind == "lex":
        return LexLtScanner(sigma)
    if kind == "llex":
        return LlexLtScanner(sigma)
    if kind == "lex2":
        return Lex2LtScanner(sigma)
    raise ValueError("no strict-order scanner for kind %r" % (kind,))


# ---------------------------------------------------------------------------
# Multi-track products


@dataclass
class Comp:
    """One component of a track product.

    ``machine`` is an Nfa (required when ``driver``) or a Scanner;
    ``slots`` names the joint-symbol positions the component reads.
    """

    machine: object
    slots: tuple
    driver: bool = False


def _proj(sym, slots):
    if len(slots) == 1:
        return sym[slots[0]]
    return tuple(sym[i] for i in slots)


def _comp_initial(comp):
    m = comp.machine
    if isinstance(m, Nfa):
        return frozenset({m.initial})
    return frozenset({m.initial})


def _comp_step(comp, stateset, proj):
    """Step a component's state set; None projection means all-#."""
    m = comp.machine
    if stateset == DONE:
        return DONE if proj is None else None
    if proj is None:
        return DONE if _comp_accepting(comp, stateset) else None
    nxt = set()
    if isinstance(m, Nfa):
        for q in stateset:
            nxt |= m._delta.get(q, {}).get(proj, set())
    else:
        for q in stateset:
            nxt |= set(m.step(q, proj))
    return frozenset(nxt) if nxt else None


def _comp_accepting(comp, stateset):
    if stateset == DONE:
        return True
    m = comp.machine
    if isinstance(m, Nfa):
        return bool(stateset & m.finals)
    return any(m.is_final(q) for q in stateset)


def _driver_options(comp, stateset):
    """Projection options of a driver: (proj or None, ...)."""
    opts = {}
    if stateset == DONE:
        return {None: DONE}
    m = comp.machine
    for q in stateset:
        for proj, dsts in m._delta.get(q, {}).items():
            opts.setdefault(proj, set()).update(dsts)
    out = {proj: frozenset(dsts) for proj, dsts in opts.items()}
    if _comp_accepting(comp, stateset):
        out[None] = DONE
    return out


def _merge_assignments(arity, picks):
    """Combine driver slot assignments into a joint symbol, or None."""
    sym = [None] * arity
    for (slots, proj) in picks:
        values = (PAD,) * len(slots) if proj is None else (
            (proj,) if len(slots) == 1 else proj
        )
        for slot, v in zip(slots, values):
            if sym[slot] is not None and sym[slot] != v:
                return None
            sym[slot] = v
    if any(v is None for v in sym):
        return None
    if all(v == PAD for v in sym):
        return None
    return tuple(sym)


def track_product(components, arity):
    """Lazy product over joint k-tuple symbols.

    Driver components must be Nfas and jointly cover every slot; their
    explicit transitions generate the candidate joint symbols, which the
    remaining components filter.  Returns an explicit Nfa over the joint
    symbols that were reachable.
    """
    drivers = [c for c in components if c.driver]
    covered = set()
    for c in drivers:
        covered.update(c.slots)
    if covered != set(range(arity)):
        raise ValueError("driver components must cover every track")
    for c in drivers:
        if not isinstance(c.machine, Nfa):
            raise ValueError("driver components must be explicit Nfas")

    init = tuple(_comp_initial(c) for c in components)
    seen = {init}
    todo = [init]
    transitions = set()
    symbols = set()
    while todo:
        state = todo.pop()
        option_lists = []
        for c, s in zip(components, state):
            if c.driver:
                option_lists.append((c, _driver_options(c, s)))
        # enumerate joint symbols from driver choices
        choice_sets = [
            [(c.slots, proj) for proj in opts] for (c, opts) in option_lists
        ]
        stack = [((), 0)]
        joints = set()
        while stack:
            picks, i = stack.pop()
            if i == len(choice_sets):
                sym = _merge_assignments(arity, list(picks))
                if sym is not None:
                    joints.add(sym)
                continue
            for choice in choice_sets[i]:
                stack.append((picks + (choice,), i + 1))
        for sym in joints:
            nxt = []
            ok = True
            for c, s in zip(components, state):
                proj = _proj(sym, c.slots)
                if (proj == PAD and len(c.slots) == 1) or (
                    len(c.slots) > 1 and all(x == PAD for x in proj)
                ):
                    proj = None
                ns = _comp_step(c, s, proj)
                if ns is None:
                    ok = False
                    break
                nxt.append(ns)
            if not ok:
                continue
            nxt = tuple(nxt)
            transitions.add((state, sym, nxt))
            symbols.add(sym)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)

    finals = frozenset(
        st
        for st in seen
        if all(_comp_accepting(c, s) for c, s in zip(components, st))
    )
    sigma = Alphabet(tuple(sorted(symbols, key=_skey)))
    return Nfa(sigma, frozenset(seen), init, frozenset(transitions), finals)


def conv_product(a, b):
    """Automaton for {x ⊗ y : x ∈ L(a), y ∈ L(b)} over pair symbols."""
    return track_product(
        [Comp(a, (0,), driver=True), Comp(b, (1,), driver=True)], 2
    )


def diag_nfa(a):
    """Automaton for {x ⊗ x : x ∈ L(a)} over pair symbols."""
    trans = frozenset((q, (s, s), p) for (q, s, p) in a.transitions)
    symbols = sorted({(s, s) for (_q, s, _p) in a.transitions}, key=_skey)
    return Nfa(Alphabet(tuple(symbols)), a.states, a.initial, trans, a.finals)


def project(rel, slot, base):
    """Projection of a 2-track language to one track, dropping padding.

    Transitions whose chosen track is # only occur in suffixes, so they
    are folded into acceptance: a state is final when some all-padded
    path reaches a final state.
    """
    base = alphabet(base)
    keep = set()
    pad_edges = {}
    for (q, sym, p) in rel.transitions:
        v = sym[slot]
        if v == PAD:
            pad_edges.setdefault(q, set()).add(p)
        else:
            keep.add((q, v, p))
    finals = set(rel.finals)
    changed = True
    while changed:
        changed = False
        for q, dsts in pad_edges.items():
            if q not in finals and dsts & finals:
                finals.add(q)
                changed = True
    return Nfa(base, rel.states, rel.initial, frozenset(keep), frozenset(finals))


def is_subset(a, b):
    """None when L(a) ⊆ L(b), else a witness word in L(a) \\ L(b).

    Lazy product of `a` with the complement of `b` (determinized on the
    fly); only symbols on `a`-transitions are explored.
    """
    start = (a.initial, frozenset({b.initial}))
    if a.initial in a.finals and not (start[1] & b.finals):
        return ()
    seen = {start}
    frontier = [(start, ())]
    while frontier:
        nxt = []
        for ((qa, S), w) in frontier:
            for sym, dsts in sorted(a._delta.get(qa, {}).items(), key=lambda kv: _skey(kv[0])):
                T = frozenset(b.step(S, sym))
                for p in sorted(dsts, key=_skey):
                    node = (p, T)
                    word = w + (sym,)
                    if p in a.finals and not (T & b.finals):
                        return word
                    if node not in seen:
                        seen.add(node)
                        nxt.append((node, word))
        frontier = nxt
    return None
