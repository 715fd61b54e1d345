"""Two-counter machines with increment and decrement-or-zero-test, the
undecidability source behind the weighted and tree constructions."""
from __future__ import annotations

from dataclasses import dataclass


class UndeclaredState(KeyError):
    pass


@dataclass(frozen=True)
class Inc:
    counter: int
    next: str


@dataclass(frozen=True)
class DecOrZero:
    counter: int
    next_pos: str
    next_zero: str


@dataclass(frozen=True)
class Halt:
    pass


@dataclass(frozen=True)
class Config:
    state: str
    c1: int
    c2: int
    steps: int = 0

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("counters are nonnegative")


HALTED = "halted"
ACCEPTED = "accepted"
REJECTED = "rejected"
FUEL_EXHAUSTED = "fuel-exhausted"


@dataclass(frozen=True)
class MinskyMachine:
    states: frozenset
    initial: str
    accepting: str
    program: tuple  # of (state, instruction)

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        prog = dict(self.program)
        if set(prog) != set(self.states):
            raise ValueError("program must map every state")
        if self.initial not in self.states or self.accepting not in self.states:
            raise ValueError("initial/accepting state not declared")
        if not isinstance(prog[self.accepting], Halt):
            raise ValueError("accepting state must halt")
        for q, ins in prog.items():
            if isinstance(ins, Inc):
                targets = [ins.next]
            elif isinstance(ins, DecOrZero):
                targets = [ins.next_pos, ins.next_zero]
            elif isinstance(ins, Halt):
                targets = []
            else:
                raise ValueError("unknown instruction %r" % (ins,))
            if isinstance(ins, (Inc, DecOrZero)) and ins.counter not in (1, 2):
                raise ValueError("counter must be 1 or 2")
            for t in targets:
                if t not in self.states:
                    raise ValueError("undeclared target state %r" % t)

    @property
    def instructions(self):
        return dict(self.program)


def step(m, cfg):
    """One instruction; returns the next Config or HALTED."""
    if cfg.state not in m.states:
        raise UndeclaredState(cfg.state)
    ins = m.instructions[cfg.state]
    if isinstance(ins, Halt):
        return HALTED
    if isinstance(ins, Inc):
        c1 = cfg.c1 + (1 if ins.counter == 1 else 0)
        c2 = cfg.c2 + (1 if ins.counter == 2 else 0)
        return Config(ins.next, c1, c2, cfg.steps + 1)
    value = cfg.c1 if ins.counter == 1 else cfg.c2
    if value == 0:
        return Config(ins.next_zero, cfg.c1, cfg.c2, cfg.steps + 1)
    c1 = cfg.c1 - (1 if ins.counter == 1 else 0)
    c2 = cfg.c2 - (1 if ins.counter == 2 else 0)
    return Config(ins.next_pos, c1, c2, cfg.steps + 1)


def run_trace(m, input_value, fuel):
    """Configurations from (initial, input, 0) until halt or fuel out."""
    cfg = Config(m.initial, input_value, 0)
    trace = [cfg]
    for _ in range(fuel):
        nxt = step(m, cfg)
        if nxt == HALTED:
            return trace, HALTED
        cfg = nxt
        trace.append(cfg)
    return trace, FUEL_EXHAUSTED


def accepts(m, input_value, fuel):
    """ACCEPTED when the accepting halt is reached within fuel steps,
    REJECTED on any other halt, FUEL_EXHAUSTED otherwise."""
    trace, status = run_trace(m, input_value, fuel)
    if status == HALTED:
        return ACCEPTED if trace[-1].state == m.accepting else REJECTED
    return FUEL_EXHAUSTED


# Fixture machines used across the test and acceptance suites.


def machine_accept_all():
    """Initial = accepting: every input is accepted immediately."""
    return MinskyMachine(
        frozenset({"h"}), "h", "h", (("h", Halt()),)
    )


def machine_accept_none():
    """A non-accepting halt next to an unreachable accepting state."""
    return MinskyMachine(
        frozenset({"s", "h"}), "s", "h", (("s", Halt()), ("h", Halt()))
    )


def machine_accept_zero():
    """Accepts exactly the input 0 (one zero-test on counter 1)."""
    return MinskyMachine(
        frozenset({"q0", "sink", "h"}),
        "q0",
        "h",
        (
            ("q0", DecOrZero(1, "sink", "h")),
            ("sink", Halt()),
            ("h", Halt()),
        ),
    )


# ---------------------------------------------------------------------------
# Serialization


def _ins_to_json(ins):
    if isinstance(ins, Inc):
        return {"op": "inc", "counter": ins.counter, "next": ins.next}
    if isinstance(ins, DecOrZero):
        return {
            "op": "deconzero",
            "counter": ins.counter,
            "next_pos": ins.next_pos,
            "next_zero": ins.next_zero,
        }
    return {"op": "halt"}


def _ins_from_json(obj):
    if obj["op"] == "inc":
        return Inc(obj["counter"], obj["next"])
    if obj["op"] == "deconzero":
        return DecOrZero(obj["counter"], obj["next_pos"], obj["next_zero"])
    if obj["op"] == "halt":
        return Halt()
    raise ValueError("unknown instruction %r" % (obj,))


def minsky_to_json(m):
    return {
        "states": sorted(m.states),
        "initial": m.initial,
        "accepting": m.accepting,
        "program": {q: _ins_to_json(ins) for q, ins in sorted(m.instructions.items())},
    }


def minsky_from_json(obj):
    return MinskyMachine(
        frozenset(obj["states"]),
        obj["initial"],
        obj["accepting"],
        tuple((q, _ins_from_json(ins)) for q, ins in obj["program"].items()),
    )
