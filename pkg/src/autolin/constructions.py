"""The order-producing reductions.

* Polynomials become run-counting NFAs (one accepting run per unit of the
  polynomial's value).
* A pair of polynomials becomes a regular pair-language whose two-level
  lexicographic order is an omega-sequence of blocks, each a delimiter-
  separated pair of omega*/omega stacks sized by the polynomial values,
  together with the explicit automorphism witness when the values agree.
* The same order is re-cut as a deterministic context-free language under
  a reversed-suffix encoding.
* A weighted automaton becomes a regular tree language (run trees plus
  delimiter-decorated words) ordered by the tree order; a counter machine
  becomes the triple-convolution tree language with the block comparator.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from . import tracks, trees as tr, weighted as wt
from .automata import (
    PAD,
    LESS,
    EQUAL,
    GREATER,
    Alphabet,
    Nfa,
    as_word,
    concat_nfa,
    convolve,
    count_accepting_runs,
    deconvolve,
    enumerate_runs_brute,
    language_upto,
    literal_nfa,
    plus_nfa,
    star_nfa,
    union_nfa,
    _skey,
)
from .orders import DeltaPoint, cmp_lex, delta_cmp
from .trees import Tree, TreeAutomaton, cmp_trees, tree_from_word

TREE_FILL = "$"


class WitnessUnavailable(ValueError):
    """The two polynomials disagree at the requested point."""


class MalformedBlock(ValueError):
    """A word is not a valid image under the block substitution."""


class NotARunTree(ValueError):
    pass


# ---------------------------------------------------------------------------
# Polynomials


@dataclass(frozen=True)
class Polynomial:
    k: int
    monomials: tuple  # ((exponent vector, coefficient), ...)

    def __post_init__(self):
        for (es, c) in self.monomials:
            if len(es) != self.k:
                raise ValueError("exponent vector arity mismatch")
            if c < 1:
                raise ValueError("coefficients are positive")

    def eval(self, xs):
        if len(xs) != self.k:
            raise ValueError("arity mismatch")
        total = 0
        for (es, c) in self.monomials:
            term = c
            for x, e in zip(xs, es):
                term *= x**e
            total += term
        return total

    def __str__(self):
        if not self.monomials:
            return "0"
        parts = []
        for (es, c) in self.monomials:
            fs = [] if c == 1 and any(es) else [str(c)]
            for i, e in enumerate(es):
                if e == 0:
                    continue
                v = "x%d" % (i + 1) if self.k > 1 else "x"
                fs.append(v if e == 1 else "%s^%d" % (v, e))
            parts.append("*".join(fs) if fs else str(c))
        return "+".join(parts)


_FACTOR_RE = re.compile(r"^(?:(\d+)|x(\d*)(?:\^(\d+))?)$")


def parse_polynomial(text, k=None):
    """Parse sums of monomials like ``x``, ``2x+1``, ``x^2``, ``x1*x2``,
    ``x1^2*x2+3``; coefficients are naturals, ``x`` means ``x1``."""
    text = text.replace(" ", "")
    if text == "0":
        return Polynomial(k or 1, ())
    monos = []
    maxvar = 0
    for part in text.split("+"):
        if not part:
            raise ValueError("empty monomial in %r" % text)
        coeff = 1
        exps = {}
        # allow juxtaposition like 2x or 3x^2
        m = re.match(r"^(\d+)(x.*)$", part)
        if m:
            part = m.group(1) + "*" + m.group(2)
        for f in part.split("*"):
            fm = _FACTOR_RE.match(f)
            if not fm:
                raise ValueError("bad factor %r" % f)
            if fm.group(1) is not None:
                coeff *= int(fm.group(1))
            else:
                idx = int(fm.group(2)) if fm.group(2) else 1
                exp = int(fm.group(3)) if fm.group(3) else 1
                exps[idx] = exps.get(idx, 0) + exp
                maxvar = max(maxvar, idx)
        monos.append((exps, coeff))
    k = k or max(maxvar, 1)
    out = []
    for exps, coeff in monos:
        if any(i > k for i in exps):
            raise ValueError("variable index exceeds arity %d" % k)
        if coeff == 0:
            continue
        out.append((tuple(exps.get(i + 1, 0) for i in range(k)), coeff))
    return Polynomial(k, tuple(out))


POLY_ALPHABET = Alphabet(("a", "¢"))


def encode_arguments(xs):
    """The word a^x1 ¢ a^x2 ¢ ... a^xk ¢."""
    out = []
    for x in xs:
        out += ["a"] * x + ["¢"]
    return tuple(out)


def poly_run_nfa(p):
    """NFA with exactly p(x) accepting runs on the encoded argument word.

    A monomial is a chain of per-variable blocks; a block for exponent e
    is the product of e independent choose-one-position passes, so one
    a-run of length x contributes x^e runs; coefficients add parallel
    copies and monomials a disjoint union.
    """
    states = set()
    trans = set()
    finals = set()
    initial = ("init",)
    states.add(initial)

    def block_states(tag, var_index, exponent):
        # states of one variable block: commitment vectors over e copies
        vecs = list(itertools.product((0, 1), repeat=exponent))
        return {(tag, var_index, v) for v in vecs}

    for midx, (es, coeff) in enumerate(p.monomials):
        for copy in range(coeff):
            tag = ("m", midx, copy)
            entry = None
            prev_exit = None
            for i, e in enumerate(es):
                vecs = list(itertools.product((0, 1), repeat=e))
                for v in vecs:
                    states.add((tag, i, v))
                start = (tag, i, (0,) * e)
                full = (tag, i, (1,) * e)
                # 'a' grows the commitment vector (strictly or not)
                for v in vecs:
                    for v2 in vecs:
                        if all(a <= b for a, b in zip(v, v2)):
                            trans.add(((tag, i, v), "a", (tag, i, v2)))
                if prev_exit is not None:
                    trans.add((prev_exit, "¢", start))
                else:
                    entry = start
                prev_exit = full
            done = (tag, "done")
            states.add(done)
            trans.add((prev_exit, "¢", done))
            finals.add(done)
            # wire the fresh initial to the entry block
            for (src, sym, dst) in list(trans):
                if src == entry:
                    trans.add((initial, sym, dst))
            if entry in finals:
                finals.add(initial)
    return Nfa(POLY_ALPHABET, frozenset(states), initial, frozenset(trans), frozenset(finals))


# ---------------------------------------------------------------------------
# The two-polynomial pair language


@dataclass(frozen=True)
class BlockCoordinate:
    """Decoded position inside the pair language: argument vector, side
    bit, tower index, and the payload (a run word or a delimiter word)."""

    xbar: tuple
    side: int  # 0: descending tower, 1: ascending tower
    m: int
    kind: str  # "run" | "delim"
    payload: tuple


@dataclass
class ConstructionBundle:
    language: object  # Nfa | TreeAutomaton | CF description
    alphabet_order: Alphabet
    decode: object  # member -> coordinate
    predicted_cmp: object  # coordinate pair -> verdict
    actual_cmp: object  # member pair -> verdict
    members: object  # bound -> list of members
    meta: dict = field(default_factory=dict)


def _delta_symbols(tag, nfa):
    """Run-word alphabet: one symbol per transition, in the paper's tuple
    format with the flattened-child marker as last component."""
    out = {}
    for (src, sym, dst) in sorted(nfa.transitions, key=lambda t: (t[0], _skey(t[1]), t[2])):
        out[(src, sym, dst)] = (tag, src, sym, dst, "i")
    return out


def run_words(nfa, delta_map, w):
    """The encodings of all accepting runs on w, one word per run."""
    out = []
    for run in enumerate_runs_brute(nfa, w):
        word = []
        for i in range(len(run) - 1):
            word.append(delta_map[(run[i], as_word(w)[i], run[i + 1])])
        out.append(tuple(word))
    return out


def _run_conv_nfa(nfa, delta_map, pair_sigma):
    """Pair automaton for {w ⊗ run-word : run of nfa on w}."""
    trans = set()
    for (src, sym, dst) in nfa.transitions:
        trans.add((("r", src), (sym, delta_map[(src, sym, dst)]), ("r", dst)))
    return Nfa(
        pair_sigma,
        frozenset(("r", q) for q in nfa.states),
        ("r", nfa.initial),
        frozenset(trans),
        frozenset(("r", f) for f in nfa.finals),
    )


def delimiter_word_nfa(sigma):
    """The language 3 2+ 3+ 2 over the given alphabet."""
    lit = lambda w: literal_nfa(sigma, w)
    return concat_nfa(
        concat_nfa(concat_nfa(lit(("3",)), plus_nfa(lit(("2",)))), plus_nfa(lit(("3",)))),
        lit(("2",)),
    )


def decode_delimiter_word(w):
    """(i, j) with the word 3 2^{j+1} 3^{i+1} 2; the descending index is
    the exponent of the middle block."""
    w = tuple(w)
    m = re.match(r"^3(2+)(3+)2$", "".join(w))
    if not m:
        return None
    return DeltaPoint(len(m.group(2)) - 1, len(m.group(1)) - 1)


def build_K(p, q):
    """The pair language over the tagged-run/digit alphabet whose
    two-level lexicographic order is the two-polynomial block order."""
    if p.k != q.k:
        raise ValueError("polynomials must share arity")
    k = p.k
    ap = poly_run_nfa(p).relabel()
    aq = poly_run_nfa(q).relabel()
    dp = _delta_symbols("p", ap)
    dq = _delta_symbols("q", aq)
    sigma = Alphabet(tuple(dp.values()) + tuple(dq.values()) + ("0", "1", "2", "3", "¢", "a"))
    pair_syms = set()
    arg_shape = None
    lit = lambda w: literal_nfa(sigma, w)
    block = concat_nfa(star_nfa(lit(("a",))), lit(("¢",)))
    for _ in range(k):
        arg_shape = block if arg_shape is None else concat_nfa(arg_shape, block)

    def side_nfa(core_nfa, delta_map, marker, other):
        # [union_w w ⊗ runs] · (marker+ other ⊗ ε)
        pair_sigma_local = Alphabet(
            tuple(sorted(set(
                [(sym, d) for ((s0, sym, s1), d) in delta_map.items()]
                + [(marker, PAD), (other, PAD)]
            ), key=_skey))
        )
        core = _run_conv_nfa(core_nfa, delta_map, pair_sigma_local)
        tail = concat_nfa(
            plus_nfa(literal_nfa(pair_sigma_local, ((marker, PAD),))),
            literal_nfa(pair_sigma_local, ((other, PAD),)),
        )
        return concat_nfa(core, tail)

    runs_p = side_nfa(ap, dp, "0", "1")
    runs_q = side_nfa(aq, dq, "1", "0")
    suffix0 = concat_nfa(plus_nfa(lit(("0",))), lit(("1",)))
    suffix1 = concat_nfa(plus_nfa(lit(("1",))), lit(("0",)))
    delims = delimiter_word_nfa(sigma)
    delim_p = tracks.conv_product(concat_nfa(arg_shape, suffix0), delims)
    delim_q = tracks.conv_product(concat_nfa(arg_shape, suffix1), delims)

    def widen(nfa):
        pair_syms.update(nfa.alphabet.symbols)
        return nfa

    parts = [widen(x) for x in (runs_p, runs_q, delim_p, delim_q)]
    pair_sigma = Alphabet(tuple(sorted(pair_syms, key=_skey)))
    parts = [
        Nfa(pair_sigma, x.states, x.initial, x.transitions, x.finals) for x in parts
    ]
    knfa = parts[0]
    for x in parts[1:]:
        knfa = union_nfa(knfa, x)
    knfa = knfa.relabel()

    run_word_set = ("p", "q")

    def decode(member):
        u, v = deconvolve(member if isinstance(member, tuple) else tuple(member))
        text = list(u)
        xbar = []
        count = 0
        i = 0
        while i < len(text) and text[i] in ("a", "¢"):
            if text[i] == "a":
                count += 1
            else:
                xbar.append(count)
                count = 0
            i += 1
        if len(xbar) != k:
            raise MalformedBlock("argument block arity mismatch")
        rest = text[i:]
        if not rest or len(set(rest[:-1])) != 1 or rest[-1] == rest[0]:
            raise MalformedBlock("tower suffix malformed")
        b = 0 if rest[0] == "0" else 1
        m = len(rest) - 1
        if v and isinstance(v[0], tuple) and v[0][0] in run_word_set:
            kind = "run"
        else:
            kind = "delim"
        return BlockCoordinate(tuple(xbar), b, m, kind, tuple(v))

    def vec_cmp(x, y):
        for a, b in zip(x, y):
            if a != b:
                return LESS if a < b else GREATER
        return EQUAL

    def payload_cmp(c1, c2):
        if c1.kind != c2.kind:
            return LESS if c1.kind == "run" else GREATER
        return cmp_lex(c1.payload, c2.payload, sigma)

    def predicted(c1, c2):
        if c1.side == 0 and c2.side == 1:
            return LESS if vec_cmp(c1.xbar, c2.xbar) in (LESS, EQUAL) else GREATER
        if c1.side == 1 and c2.side == 0:
            return LESS if vec_cmp(c1.xbar, c2.xbar) == LESS else GREATER
        v = vec_cmp(c1.xbar, c2.xbar)
        if v != EQUAL:
            return v
        if c1.m != c2.m:
            if c1.side == 0:
                return LESS if c1.m > c2.m else GREATER
            return LESS if c1.m < c2.m else GREATER
        return payload_cmp(c1, c2)

    def actual(m1, m2):
        u1, v1 = deconvolve(tuple(m1))
        u2, v2 = deconvolve(tuple(m2))
        c = cmp_lex(u1, u2, sigma)
        if c != EQUAL:
            return c
        return cmp_lex(v1, v2, sigma)

    def members(bound):
        return language_upto(knfa, bound)

    return ConstructionBundle(
        language=knfa,
        alphabet_order=sigma,
        decode=decode,
        predicted_cmp=predicted,
        actual_cmp=actual,
        members=members,
        meta={
            "p": p,
            "q": q,
            "ap": ap,
            "aq": aq,
            "dp": dp,
            "dq": dq,
            "pair_sigma": pair_sigma,
            "k": k,
        },
    )


def encode_member(bundle, coord):
    """Inverse of decode: the convolution word of a block coordinate."""
    track1 = list(encode_arguments(coord.xbar))
    track1 += [str(coord.side)] * coord.m + [str(1 - coord.side)]
    return convolve([tuple(track1), coord.payload]).symbols


# ---------------------------------------------------------------------------
# Binarization


def binarize(bundle):
    """Blockwise substitution of the i-th letter by 1^i 0^{l-i}: an order
    isomorphism onto a pair language over 0/1."""
    sigma = bundle.alphabet_order
    ell = len(sigma)

    def g_sym(s):
        if s == PAD:
            return (PAD,) * ell
        i = sigma.index(s) + 1
        return ("1",) * i + ("0",) * (ell - i)

    knfa = bundle.language
    states = {("s", q) for q in knfa.states}
    trans = set()
    for (src, (x, y), dst) in knfa.transitions:
        gx, gy = g_sym(x), g_sym(y)
        prev = ("s", src)
        for j in range(ell):
            nxt = ("s", dst) if j == ell - 1 else ("b", (src, (x, y), dst), j)
            states.add(nxt)
            trans.add((prev, (gx[j], gy[j]), nxt))
            prev = nxt
    bsigma = Alphabet(
        tuple(
            s
            for s in (("0", "0"), ("0", "1"), ("1", "0"), ("1", "1"),
                      ("0", PAD), ("1", PAD), (PAD, "0"), (PAD, "1"))
        )
    )
    lnfa = Nfa(
        bsigma,
        frozenset(states),
        ("s", knfa.initial),
        frozenset(trans),
        frozenset(("s", f) for f in knfa.finals),
    ).relabel()

    inv = {g_sym(s): s for s in sigma.symbols}
    inv[(PAD,) * ell] = PAD

    def g_word(w):
        out = []
        for s in as_word(w):
            out.extend("1" * (sigma.index(s) + 1) + "0" * (ell - sigma.index(s) - 1))
        return tuple(out)

    def g_member(member):
        u, v = deconvolve(tuple(member))
        return convolve([g_word(u), g_word(v)]).symbols

    def g_inverse_word(w):
        w = as_word(w)
        if len(w) % ell:
            raise MalformedBlock("length not a multiple of the block size")
        out = []
        for i in range(0, len(w), ell):
            blk = tuple(w[i : i + ell])
            if blk not in inv or inv[blk] == PAD:
                raise MalformedBlock("unknown block %r" % (blk,))
            out.append(inv[blk])
        return tuple(out)

    def decode(member):
        u, v = deconvolve(tuple(member))
        return bundle.decode(convolve([g_inverse_word(u), g_inverse_word(v)]).symbols)

    bin_order = Alphabet(("0", "1"))

    def actual(m1, m2):
        u1, v1 = deconvolve(tuple(m1))
        u2, v2 = deconvolve(tuple(m2))
        c = cmp_lex(u1, u2, bin_order)
        if c != EQUAL:
            return c
        return cmp_lex(v1, v2, bin_order)

    def members(bound):
        return [g_member(m) for m in bundle.members(bound // ell)]

    return ConstructionBundle(
        language=lnfa,
        alphabet_order=bin_order,
        decode=decode,
        predicted_cmp=bundle.predicted_cmp,
        actual_cmp=actual,
        members=members,
        meta={"base": bundle, "block": ell, "g_word": g_word, "g_member": g_member},
    )


# ---------------------------------------------------------------------------
# The automorphism witness


def _prefix_deviation_scanner(prefix):
    """Scanner over relation symbols accepting pairs whose first element's
    argument track deviates from (or ends inside) the given prefix."""

    class Dev(tracks.Scanner):
        initial = 0

        def step(self, state, sym):
            if state == "dev":
                return ("dev",)
            X, _Y = sym
            x1 = X[0] if X != PAD else PAD
            if state < len(prefix):
                return ("dev",) if x1 != prefix[state] else (state + 1,)
            return ()

        def is_final(self, state):
            return state == "dev"

    return Dev()


class _InnerTrackScanner(tracks.Scanner):
    """Runs an Nfa on one inner track of one element of a relation symbol."""

    def __init__(self, nfa, element, inner):
        self.nfa = nfa
        self.element = element
        self.inner = inner
        self.initial = ("run", frozenset({nfa.initial}))

    def step(self, state, sym):
        X = sym[self.element]
        letter = PAD if X == PAD else X[self.inner]
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


def _rel_symbols(sigma):
    """All relation symbols (X, Y) over pair symbols with # padding."""
    pool = [PAD]
    for x in (PAD,) + tuple(sigma.symbols):
        for y in (PAD,) + tuple(sigma.symbols):
            if not (x == PAD and y == PAD):
                pool.append((x, y))
    out = []
    for X in pool:
        for Y in pool:
            if not (X == PAD and Y == PAD):
                out.append((X, Y))
    return out


def _shift_case_nfa(case, prefix, payload_syms):
    """Template automata for the witness's tower shifts.

    States walk the shared argument prefix (element tracks equal), then
    the case-specific boundary; payload symbols ride along unchanged.
    """
    taus = list(payload_syms) + [PAD]
    trans = set()
    states = set()

    def add(a, sym, b):
        states.update({a, b})
        trans.add((a, sym, b))

    for i, c in enumerate(prefix):
        for t in taus:
            add(("p", i), ((c, t), (c, t)), ("p", i + 1))
    start_after = ("p", len(prefix))
    if case == "m>1":
        for t in taus:
            add(start_after, (("0", t), ("0", t)), ("z", 1))
            add(("z", 1), (("0", t), ("0", t)), ("z", 1))
            add(("z", 1), (("0", t), ("1", t)), ("e", 1))
            add(("e", 1), (("1", t), (PAD, t) if t != PAD else PAD), ("tail",))
            add(("tail",), ((PAD, t), (PAD, t)) if t != PAD else None, ("tail",))
    elif case == "m=1-delim":
        for t in taus:
            add(start_after, (("0", t), ("1", t)), ("e", 1))
            add(("e", 1), (("1", t), ("0", t)), ("tail",))
            add(("tail",), ((PAD, t), (PAD, t)) if t != PAD else None, ("tail",))
    elif case == "b=1":
        for t in taus:
            add(start_after, (("1", t), ("1", t)), ("o", 1))
            add(("o", 1), (("1", t), ("1", t)), ("o", 1))
            add(("o", 1), (("0", t), ("1", t)), ("e", 1))
            add(("e", 1), ((PAD, t) if t != PAD else PAD, ("0", t)), ("tail",))
            add(("tail",), ((PAD, t), (PAD, t)) if t != PAD else None, ("tail",))
    else:
        raise ValueError(case)
    trans = {t for t in trans if t[1] is not None}
    syms = sorted({s for (_a, s, _b) in trans}, key=_skey)
    return Nfa(
        Alphabet(tuple(syms)),
        frozenset(states),
        ("p", 0),
        frozenset(trans),
        frozenset({("tail",)}),
    )


def _widen_union(parts):
    syms = set()
    for p in parts:
        syms.update(p.alphabet.symbols)
    sigma = Alphabet(tuple(sorted(syms, key=_skey)))
    parts = [Nfa(sigma, p.states, p.initial, p.transitions, p.finals) for p in parts]
    out = parts[0]
    for p in parts[1:]:
        out = union_nfa(out, p)
    return out


def automorphism_witness(p, q, ybar, bundle=None):
    """The explicit order automorphism moving the block at the given
    argument point, when the polynomial values there agree.

    Returns (f, rel): f maps decoded coordinates, rel is the automaton of
    the relation's convolution graph, ready for the automata verifier.
    """
    if bundle is None:
        bundle = build_K(p, q)
    if p.eval(ybar) != q.eval(ybar):
        raise WitnessUnavailable("values differ at %r: %d vs %d" % (ybar, p.eval(ybar), q.eval(ybar)))
    meta = bundle.meta
    sigma = bundle.alphabet_order
    ay = encode_arguments(ybar)
    rhos = sorted(run_words(meta["ap"], meta["dp"], ay), key=lambda w: tuple(map(sigma.index, w)))
    sigmas = sorted(run_words(meta["aq"], meta["dq"], ay), key=lambda w: tuple(map(sigma.index, w)))
    if len(rhos) != len(sigmas) or len(rhos) != p.eval(ybar):
        raise WitnessUnavailable("run counts disagree with the polynomial values")
    rho_index = {r: i for i, r in enumerate(rhos)}

    def f(coord):
        if coord.xbar != tuple(ybar):
            return coord
        if coord.side == 0 and coord.m > 1:
            return BlockCoordinate(coord.xbar, 0, coord.m - 1, coord.kind, coord.payload)
        if coord.side == 0 and coord.m == 1:
            if coord.kind == "delim":
                return BlockCoordinate(coord.xbar, 1, 1, "delim", coord.payload)
            return BlockCoordinate(coord.xbar, 1, 1, "run", sigmas[rho_index[coord.payload]])
        return BlockCoordinate(coord.xbar, 1, coord.m + 1, coord.kind, coord.payload)

    knfa = bundle.language
    payload_syms = tuple(s for s in sigma.symbols if s not in ("0", "1", "¢", "a"))
    cases = [
        _shift_case_nfa("m>1", ay, payload_syms),
        _shift_case_nfa("b=1", ay, payload_syms),
    ]
    # m = 1 with a delimiter payload: restrict the shared payload track
    delim_case = _shift_case_nfa("m=1-delim", ay, payload_syms)
    delim_case = tracks.track_product(
        [
            tracks.Comp(delim_case, (0, 1), driver=True),
            tracks.Comp(_InnerTrackScanner(delimiter_word_nfa(sigma), 0, 1), (0, 1)),
        ],
        2,
    )
    cases.append(delim_case)
    # m = 1 with run payloads: finitely many explicit pairs
    for i, rho in enumerate(rhos):
        x = encode_member(bundle, BlockCoordinate(tuple(ybar), 0, 1, "run", rho))
        y = encode_member(bundle, BlockCoordinate(tuple(ybar), 1, 1, "run", sigmas[i]))
        word = []
        n = max(len(x), len(y))
        for t in range(n):
            word.append(
                (x[t] if t < len(x) else PAD, y[t] if t < len(y) else PAD)
            )
        syms = Alphabet(tuple(sorted(set(word), key=_skey)))
        cases.append(literal_nfa(syms, tuple(word)))
    # identity on every member outside the moved block
    ident = tracks.diag_nfa(knfa)
    ident = tracks.track_product(
        [
            tracks.Comp(ident, (0, 1), driver=True),
            tracks.Comp(_prefix_deviation_scanner(ay), (0, 1)),
        ],
        2,
    )
    cases.append(ident)
    shifts = _widen_union(cases)
    rel = tracks.track_product(
        [
            tracks.Comp(shifts, (0, 1), driver=True),
            tracks.Comp(knfa, (0,)),
            tracks.Comp(knfa, (1,)),
        ],
        2,
    )
    return f, rel.relabel()


# ---------------------------------------------------------------------------
# The context-free variant: one-track words with a reversed payload


@dataclass(frozen=True)
class PushdownAutomaton:
    """Deterministic pushdown recognizer for the one-track encoding.

    Reading the argument/tower part, letters are pushed (tower letters
    marked).  After the separator, the first payload letter selects the
    mode: digits scan the reversed delimiter shape by finite control;
    run letters first pop the marked tower, then pop one argument letter
    per input letter while stepping a DFA of the reversed run/argument
    convolution language.  Every configuration has at most one move.
    """

    shape_dfa: object  # DFA over the argument/tower letters
    run_rev_dfa_p: object
    run_rev_dfa_q: object
    delim_rev_nfa: object
    separator: str = "$"

    def accepts(self, word):
        word = as_word(word)
        if "$" not in word:
            return False
        cut = word.index("$")
        u, z = word[:cut], word[cut + 1 :]
        if "$" in z:
            return False
        shape = self.shape_dfa
        state = {shape.initial}
        stack = []
        for c in u:
            state = shape.step(state, c)
            if not state:
                return False
            stack.append(c)
        if not (state & shape.finals):
            return False
        if not z:
            return False
        if z[0] in ("2", "3"):
            cur = {self.delim_rev_nfa.initial}
            for c in z:
                cur = self.delim_rev_nfa.step(cur, c)
                if not cur:
                    return False
            return bool(cur & self.delim_rev_nfa.finals)
        # run mode: discard the marked tower block, then pop one argument
        # letter per payload letter through the reversed convolution DFA
        side = None
        while stack and stack[-1] in ("0", "1"):
            side = stack.pop()
        if side is None:
            return False
        # the bulk tower letter is the side bit: 0-towers carry p-runs
        dfa = self.run_rev_dfa_p if side == "0" else self.run_rev_dfa_q
        cur = {dfa.initial}
        for c in z:
            if not stack:
                return False
            top = stack.pop()
            cur = dfa.step(cur, (top, c))
            if not cur:
                return False
        return not stack and bool(cur & dfa.finals)


def build_Kprime_cf(p, q, bundle=None):
    """The one-track re-encoding of the pair language: member u ⊗ v maps
    to u, separator, reversed v, ordered by the primed alphabet in which
    the digits 2 and 3 swap and the separator is maximal."""
    if bundle is None:
        bundle = build_K(p, q)
    sigma = bundle.alphabet_order
    meta = bundle.meta
    dp, dq = meta["dp"], meta["dq"]
    prime_syms = (
        tuple(dp.values())
        + tuple(dq.values())
        + ("0", "1", "3", "2", "¢", "a", "$")
    )
    sigma_prime = Alphabet(prime_syms)

    def to_prime(member):
        u, v = deconvolve(tuple(member))
        return tuple(u) + ("$",) + tuple(reversed(v))

    def from_prime(word):
        word = as_word(word)
        cut = word.index("$")
        u, z = word[:cut], word[cut + 1 :]
        return convolve([u, tuple(reversed(z))]).symbols

    def membership(word):
        word = as_word(word)
        if word.count("$") != 1:
            return False
        try:
            return bundle.language.accepts(from_prime(word))
        except Exception:
            return False

    def decode(word):
        return bundle.decode(from_prime(word))

    def actual(w1, w2):
        return cmp_lex(as_word(w1), as_word(w2), sigma_prime)

    def members(bound):
        out = []
        for m in bundle.members(bound):
            w = to_prime(m)
            if len(w) <= bound:
                out.append(w)
        return out

    # deterministic pushdown description
    from .automata import determinize

    k = meta["k"]
    lit = lambda w: literal_nfa(sigma, w)
    block = concat_nfa(star_nfa(lit(("a",))), lit(("¢",)))
    arg_shape = None
    for _ in range(k):
        arg_shape = block if arg_shape is None else concat_nfa(arg_shape, block)
    tower = union_nfa(
        concat_nfa(plus_nfa(lit(("0",))), lit(("1",))),
        concat_nfa(plus_nfa(lit(("1",))), lit(("0",))),
    )
    shape_dfa = determinize(concat_nfa(arg_shape, tower), complete=False)

    def rev_conv_dfa(core_nfa, delta_map):
        psig = Alphabet(
            tuple(sorted({(s, d) for ((s0, s, s1), d) in delta_map.items()}, key=_skey))
        )
        core = _run_conv_nfa(core_nfa, delta_map, psig)
        return determinize(core.reverse(), complete=False)

    pda = PushdownAutomaton(
        shape_dfa=shape_dfa,
        run_rev_dfa_p=rev_conv_dfa(meta["ap"], dp),
        run_rev_dfa_q=rev_conv_dfa(meta["aq"], dq),
        delim_rev_nfa=determinize(
            delimiter_word_nfa(sigma).reverse(), complete=False
        ),
    )

    return ConstructionBundle(
        language=pda,
        alphabet_order=sigma_prime,
        decode=decode,
        predicted_cmp=bundle.predicted_cmp,
        actual_cmp=actual,
        members=members,
        meta={
            "base": bundle,
            "membership": membership,
            "to_prime": to_prime,
            "from_prime": from_prime,
            "pda": pda,
        },
    )


# ---------------------------------------------------------------------------
# Run trees


_PATH_SHAPE = re.compile(r"^(0*|0*10*|110*)$")


def is_run_tree(wa, t):
    """Whether ``t`` encodes a run of the weighted automaton: the spine
    carries a word with a compatible state chain, side branches sit only
    at weight-one steps, the special branch pair hangs at the root, and
    everything except the spine letters is filler."""
    if t.is_empty:
        return False
    dom = t.domain
    if "11" not in dom or "100" in dom:
        return False
    for p in dom:
        if not _PATH_SHAPE.match(p):
            return False
    spine = 0
    while "0" * (spine + 1) in dom:
        spine += 1
    k = spine - 1
    if k < 1:
        return False
    word = tuple(t.label("0" * i) for i in range(1, k + 1))
    for p, lab in t.items:
        if p in {"0" * i for i in range(1, k + 1)}:
            if lab not in wa.alphabet:
                return False
        elif lab != TREE_FILL:
            return False
    branch_at = {i for i in range(1, k + 1) if "0" * i + "1" in dom}
    # root side pair {1, 10} plus the counting branch at 11 always exist
    feasible = {wa.initial}
    for i in range(1, k + 1):
        nxt = set()
        for q in feasible:
            for (dst, w) in wa._delta.get(q, {}).get(word[i - 1], ()):
                if i in branch_at and w != 1:
                    continue
                nxt.add(dst)
        if not nxt:
            return False
        feasible = nxt
    return bool(feasible & wa.finals)


def word_of(wa, t):
    if not is_run_tree(wa, t):
        raise NotARunTree("not a run tree of this automaton")
    k = 0
    while "0" * (k + 1) in t.domain:
        k += 1
    return tuple(t.label("0" * i) for i in range(1, k))


def n_of(wa, t):
    if not is_run_tree(wa, t):
        raise NotARunTree("not a run tree of this automaton")
    n = 0
    while "11" + "0" * (n + 1) in t.domain:
        n += 1
    return n


def make_run_tree(word, branches, n):
    """The candidate run tree with the given side-branch lengths (index i
    counts nodes on the branch at spine position i) and special length."""
    word = tuple(word)
    k = len(word)
    items = [("", TREE_FILL)]
    for i, a in enumerate(word, start=1):
        items.append(("0" * i, a))
    items.append(("0" * (k + 1), TREE_FILL))
    items.append(("1", TREE_FILL))
    items.append(("10", TREE_FILL))
    for j in range(n + 1):
        items.append(("11" + "0" * j, TREE_FILL))
    for i, m in enumerate(branches, start=1):
        for j in range(m):
            items.append(("0" * i + "1" + "0" * j, TREE_FILL))
    return Tree(tuple(items))


def run_tree_coords(t):
    """(word, branch vector, n) of a run-tree-shaped tree."""
    k = 0
    while "0" * (k + 1) in t.domain:
        k += 1
    k -= 1
    word = tuple(t.label("0" * i) for i in range(1, k + 1))
    branches = []
    for i in range(1, k + 1):
        m = 0
        while "0" * i + "1" + "0" * m in t.domain:
            m += 1
        branches.append(m)
    n = 0
    while "11" + "0" * (n + 1) in t.domain:
        n += 1
    return word, tuple(branches), n


# ---------------------------------------------------------------------------
# The tree language of a weighted automaton


@dataclass(frozen=True)
class RunTreeCoord:
    word: tuple
    branches: tuple
    n: int


@dataclass(frozen=True)
class DelimCoord:
    word: tuple
    i: int
    j: int


def _tree_alphabet(wa):
    return Alphabet((TREE_FILL,) + tuple(wa.alphabet.symbols))


def build_L_A(wa):
    """Tree automaton for the run trees of ``wa`` together with the
    delimiter-decorated words, plus decoding and the predicted order."""
    sigma = _tree_alphabet(wa)
    iota = ("i",)
    F = TREE_FILL
    states = {
        iota,
        ("chain",),
        ("plain",),
        ("special",),
        ("root",),
        ("wchain",),
        ("wend",),
        ("root2",),
        ("leafD",),
        ("twoD",),
        ("chainD",),
        ("midD",),
        ("dD",),
    }
    trans = set()

    def add(q, sym, l, r):
        trans.add((q, sym, l, r))

    add(("chain",), F, iota, iota)
    add(("chain",), F, ("chain",), iota)
    add(("plain",), F, iota, iota)
    add(("special",), F, ("plain",), ("chain",))
    for q in wa.states:
        states.add(("spine", q))
    for q in wa.finals:
        add(("spine", q), F, iota, iota)
    for ((src, a, dst), w) in wa.weights:
        add(("spine", src), a, ("spine", dst), iota)
        if w == 1:
            add(("spine", src), a, ("spine", dst), ("chain",))
    add(("root",), F, ("spine", wa.initial), ("special",))
    add(("wend",), F, iota, iota)
    for a in wa.alphabet.symbols:
        add(("wchain",), a, ("wend",), iota)
        add(("wchain",), a, ("wchain",), iota)
    add(("leafD",), F, iota, iota)
    add(("chainD",), F, iota, iota)
    add(("chainD",), F, ("chainD",), iota)
    add(("twoD",), F, ("leafD",), iota)
    add(("midD",), F, ("leafD",), ("dD",))
    add(("dD",), F, ("twoD",), ("chainD",))
    add(("dD",), F, ("midD",), iota)
    add(("root2",), F, ("wchain",), ("dD",))
    ta = TreeAutomaton(
        sigma,
        frozenset(states),
        iota,
        frozenset(trans),
        frozenset({("root",), ("root2",)}),
    )

    def decode(t):
        # run trees never contain 100; delimiter-decorated words always do
        if "100" not in t.domain:
            word, branches, n = run_tree_coords(t)
            return RunTreeCoord(word, branches, n)
        word = t.main_branch
        ij = tr.decode_delimiter_tree(t.subtree("1"))
        if word[:1] != (F,) or word[-1:] != (F,) or ij is None:
            raise MalformedBlock("not a delimiter-decorated word tree")
        return DelimCoord(tuple(word[1:-1]), ij[0], ij[1])

    def predicted(c1, c2):
        from .orders import cmp_llex

        v = cmp_llex(c1.word, c2.word, wa.alphabet)
        if v != EQUAL:
            return v
        k1 = isinstance(c1, DelimCoord)
        k2 = isinstance(c2, DelimCoord)
        if k1 != k2:
            return LESS if not k1 else GREATER
        if not k1:
            key1 = (c1.n,) + c1.branches
            key2 = (c2.n,) + c2.branches
            if key1 == key2:
                return EQUAL
            return LESS if key1 < key2 else GREATER
        return delta_cmp(DeltaPoint(c1.j, c1.i), DeltaPoint(c2.j, c2.i))

    def actual(t1, t2):
        return cmp_trees(t1, t2, sigma)

    def members(word_len=2, branch_bound=1, n_bound=1, delim_bound=2):
        out = []
        for L in range(1, word_len + 1):
            for word in itertools.product(wa.alphabet.symbols, repeat=L):
                for branches in itertools.product(range(branch_bound + 1), repeat=L):
                    for n in range(n_bound + 1):
                        t = make_run_tree(word, branches, n)
                        if is_run_tree(wa, t):
                            out.append(t)
                for i in range(delim_bound + 1):
                    for j in range(delim_bound + 1):
                        out.append(
                            tr.add_root(
                                tree_from_word(tuple(word) + (F,)),
                                tr.delimiter_tree(i, j),
                                F,
                            )
                        )
        return out

    return ConstructionBundle(
        language=ta,
        alphabet_order=sigma,
        decode=decode,
        predicted_cmp=predicted,
        actual_cmp=actual,
        members=members,
        meta={"wa": wa},
    )


# ---------------------------------------------------------------------------
# The tree language of a counter machine


@dataclass(frozen=True)
class LMCoord:
    m: int
    side: str  # "A" | "B"
    k: int
    inner: object  # RunTreeCoord | DelimCoord of the side's tree language


def _rev_marker_arcs():
    """Deterministic automaton reading marker words backwards:
    box, (letter box)*, start."""
    from .weighted import START, BOX

    arcs = {
        ("m0", BOX): "m1",
        ("m1", "a"): "m2",
        ("m2", BOX): "m1",
        ("m1", START): "mF",
    }
    return arcs, "m0", "mF"


def _vcomp(l1):
    if isinstance(l1, tuple):
        return l1[1]
    return PAD


def _lm_component(t1auto, finals1, sync):
    """Triple-track product: track one in the given tree language, track
    two a filler-word spine, track three a marker-word spine, optionally
    synchronized with the second components of track one's spine labels.

    Built bottom-up over feasible states only.
    """
    arcs, rev_init, rev_final = _rev_marker_arcs()
    iota1 = t1auto.initial
    iota = ("i",)
    OFF1, IN2, OFF2, OFF3 = "off1", "in2", "off2", "off3"

    by_children = {}
    for (q, l1, c0, c1) in t1auto.transitions:
        by_children.setdefault((c0, c1), []).append((q, l1))

    known = {}  # s1 -> set of wrapped states (s1, s2, s3, v)
    transitions = set()
    labels3 = set()

    def wrap_options(c0_states, c1_states, q, l1):
        """Parent states reachable from given child product states."""
        out = []
        v_self = _vcomp(l1) if sync else None
        for ch0 in c0_states:
            if ch0 == iota:
                c0s2, c0s3, c0v = None, None, PAD
            else:
                _s1, c0s2, c0s3, c0v = ch0
            for ch1 in c1_states:
                # tracks 2/3 never hang on right children
                if ch1 != iota:
                    _t1, t2s, t3s, _tv = ch1
                    if t2s == IN2 or t3s not in (OFF3, None):
                        continue
                # enumerate (l2, l3) for this node
                l2opts = ["$", PAD]
                if ch0 != iota and c0s2 == IN2:
                    l2opts = ["$"]  # track two is prefix-closed on the spine
                for l2 in l2opts:
                    s2 = IN2 if l2 == "$" else OFF2
                    if sync:
                        l3opts = [c0v]
                    else:
                        l3opts = set()
                        base = c0s3 if (ch0 != iota and c0s3 not in (OFF3, None)) else rev_init
                        for (st, letter), dst in arcs.items():
                            if st == base:
                                l3opts.add(letter)
                        l3opts = sorted(l3opts) + [PAD]
                    for l3 in l3opts:
                        if l3 == PAD:
                            if ch0 != iota and c0s3 not in (OFF3, None):
                                continue  # marker may not stop above its top
                            s3 = OFF3
                        else:
                            base = (
                                c0s3
                                if (ch0 != iota and c0s3 not in (OFF3, None))
                                else rev_init
                            )
                            s3 = arcs.get((base, l3))
                            if s3 is None:
                                continue
                        if l2 == PAD and l3 == PAD and l1 == PAD:
                            continue
                        out.append(((q, s2, s3, v_self), (l1, l2, l3), ch0, ch1))
        return out

    def child_options(cstate):
        # a declared-absent track-one child may still be a node carrying
        # the deeper tracks (the spine below track one's end)
        if cstate == iota1:
            return [iota] + sorted(known.get(OFF1, ()), key=_skey)
        return sorted(known.get(cstate, ()), key=_skey)

    changed = True
    while changed:
        changed = False

        def emit(state, lab, ch0, ch1):
            nonlocal changed
            t = (state, lab, ch0, ch1)
            if t not in transitions:
                transitions.add(t)
                labels3.add(lab)
                bucket = known.setdefault(state[0], set())
                if state not in bucket:
                    bucket.add(state)
                    changed = True

        for (c0, c1), pairs in list(by_children.items()):
            c0opts = child_options(c0)
            c1opts = child_options(c1)
            if not c0opts or not c1opts:
                continue
            for (q, l1) in pairs:
                for (state, lab, ch0, ch1) in wrap_options(c0opts, c1opts, q, l1):
                    emit(state, lab, ch0, ch1)
        # spine tail below track one: label (#, l2, l3)
        tail_opts = [iota] + sorted(known.get(OFF1, ()), key=_skey)
        for (state, lab, ch0, ch1) in wrap_options(tail_opts, [iota], OFF1, PAD):
            emit(state, lab, ch0, ch1)

    states = {iota} | {s for ss in known.values() for s in ss}
    finals = set()
    for s in states:
        if s == iota:
            continue
        (s1, s2, s3, _v) = s
        if s1 in finals1 and s3 == rev_final:
            finals.add(s)
    syms = sorted(labels3, key=_skey)
    return TreeAutomaton(
        Alphabet(tuple(syms)),
        frozenset(states),
        iota,
        frozenset(transitions),
        frozenset(finals),
    )
