"""Deterministic demon policies and their simulation.

A policy is a finite transition table mapping (control state, memory
register) to (action, next control state).  That domain is the whole
point: a demon's next move is a function of its own internal state and
memory only, never of unrecorded engine state, exactly like a Turing
machine reading its tape.  Whatever the demon knows about the particle it
knows through records its own measurements wrote.

Shipped policies:

* ``standard``             measure, expand, erase, repeat;
* ``choice-undo-first``    unwind unprofitable measurements reversibly
                           (livelocks: the blank-memory demon re-measures,
                           measure/unmeasure is a period-2 identity);
* ``choice-extract-first`` dump unprofitable compartments by free
                           expansion, then erase (pays full price for no
                           work: strictly worse than finishing the cycle);
* ``delayed-erasure``      bank one outcome bit per cycle on a tape, then
                           compress the tape and erase only the compressed
                           record (approaches break-even, never profit).

``enumerate_policies`` exhausts every distinct small-policy behaviour and
confirms that none beats the second law once outstanding memory is priced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .coding import codeword_length
from .engine import (
    DemonState,
    EngineGeometry,
    EngineWorld,
    Register,
    Side,
    WorkLedger,
    erase,
    extract_partition,
    insert_partition,
    isothermal_expansion,
    measure,
    net_cycle_work,
    undo_measurement,
)
from .errors import ProtocolError, SearchSpaceError, ValidationError
from .seeding import make_rng, trial_rng


class Action(Enum):
    INSERT_PARTITION = "InsertPartition"
    MEASURE = "Measure"
    UNDO_MEASURE = "UndoMeasure"
    EXPAND = "Expand"
    EXTRACT_PARTITION = "ExtractPartition"
    ERASE = "Erase"
    HALT = "Halt"


class Termination(Enum):
    COMPLETED_CYCLES = "CompletedCycles"
    LIVELOCK = "Livelock"
    HALTED = "Halted"
    PROTOCOL_ERROR = "ProtocolError"


@dataclass(frozen=True)
class Policy:
    """Total deterministic transition table over states x registers."""

    name: str
    control_states: tuple
    start: str
    table: Mapping

    def __post_init__(self):
        if self.start not in self.control_states:
            raise ValidationError(f"start state {self.start!r} not declared")
        for pc in self.control_states:
            for reg in Register:
                if (pc, reg) not in self.table:
                    raise ValidationError(
                        f"transition table misses ({pc!r}, {reg.value})")
        for (pc, reg), (action, nxt) in self.table.items():
            if pc not in self.control_states or nxt not in self.control_states:
                raise ValidationError(
                    f"transition ({pc!r},{reg.value}) uses undeclared state")
            if not isinstance(action, Action):
                raise ValidationError(f"not an action: {action!r}")

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "control_states": list(self.control_states),
            "start": self.start,
            "transitions": [
                {"state": pc, "register": reg.value,
                 "action": act.value, "next": nxt}
                for (pc, reg), (act, nxt) in sorted(
                    self.table.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Policy":
        table = {}
        for row in doc["transitions"]:
            key = (row["state"], Register(row["register"]))
            table[key] = (Action(row["action"]), row["next"])
        return cls(name=doc.get("name", "policy"),
                   control_states=tuple(doc["control_states"]),
                   start=doc["start"], table=table)


def make_policy(name: str, control_states: Sequence[str], start: str,
                entries: Mapping, default: tuple | None = None) -> Policy:
    """Build a policy, filling unspecified (state, register) pairs.

    The filler defaults to (Halt, start): unreachable combinations must
    still be defined because the table is required to be total.
    """
    if default is None:
        default = (Action.HALT, start)
    table = {}
    for pc in control_states:
        for reg in Register:
            table[(pc, reg)] = entries.get((pc, reg), default)
    return Policy(name=name, control_states=tuple(control_states),
                  start=start, table=table)


def standard_policy() -> Policy:
    """Complete every cycle: insert, measure, expand, erase."""
    return make_policy(
        "standard", ("idle", "ready", "decide", "done"), "idle",
        {
            ("idle", Register.BLANK): (Action.INSERT_PARTITION, "ready"),
            ("ready", Register.BLANK): (Action.MEASURE, "decide"),
            ("decide", Register.LEFT): (Action.EXPAND, "done"),
            ("decide", Register.RIGHT): (Action.EXPAND, "done"),
            ("done", Register.LEFT): (Action.ERASE, "idle"),
            ("done", Register.RIGHT): (Action.ERASE, "idle"),
        })


def undo_first_policy() -> Policy:
    """Selective demon that reversibly unwinds unprofitable measurements.

    On a Right record it undoes the measurement instead of paying for
    erasure.  The undo blanks its memory, and a blank-memory demon's next
    move is unconditionally to measure; the particle is still on the
    unprofitable side, so the pair of record-writing steps cancels and the
    demon two-steps forever.
    """
    return make_policy(
        "choice-undo-first", ("idle", "ready", "decide", "done"), "idle",
        {
            ("idle", Register.BLANK): (Action.INSERT_PARTITION, "ready"),
            ("ready", Register.BLANK): (Action.MEASURE, "decide"),
            ("decide", Register.LEFT): (Action.EXPAND, "done"),
            ("done", Register.LEFT): (Action.ERASE, "idle"),
            ("decide", Register.RIGHT): (Action.UNDO_MEASURE, "ready"),
        })


def extract_first_policy() -> Policy:
    """Selective demon that dumps unprofitable compartments for free.

    Extracting the partition before undoing the measurement breaks the
    livelock, but the free expansion forfeits the lg(L/(L-ell)) of work an
    honest expansion would have returned while the erasure bill stays due:
    every unprofitable cycle now costs the full kT-bit.
    """
    return make_policy(
        "choice-extract-first", ("idle", "ready", "decide", "done"), "idle",
        {
            ("idle", Register.BLANK): (Action.INSERT_PARTITION, "ready"),
            ("ready", Register.BLANK): (Action.MEASURE, "decide"),
            ("decide", Register.LEFT): (Action.EXPAND, "done"),
            ("decide", Register.RIGHT): (Action.EXTRACT_PARTITION, "done"),
            ("done", Register.LEFT): (Action.ERASE, "idle"),
            ("done", Register.RIGHT): (Action.ERASE, "idle"),
        })


def policy_presets() -> dict:
    """JSON-ready descriptions of the shipped policies.

    The three flowchart policies are plain transition tables.  The
    delayed-erasure demon banks bits on a tape and compresses it, which is
    outside the transition-table vocabulary, so its preset declares a
    dedicated runner instead.
    """
    return {
        "standard": standard_policy().to_json_dict(),
        "choice-undo-first": undo_first_policy().to_json_dict(),
        "choice-extract-first": extract_first_policy().to_json_dict(),
        "delayed-erasure": {
            "name": "delayed-erasure",
            "mode": "delayed-erasure",
            "description": ("run N standard cycles banking one outcome bit "
                            "per cycle, then compress the tape "
                            "enumeratively and erase the compressed record"),
        },
    }


@dataclass(frozen=True)
class LivelockWitness:
    """A repeated (control state, register, engine core) configuration.

    Transitions are deterministic between random insertions, so seeing the
    same configuration twice with no insertion in between proves the run
    repeats forever.
    """

    pc: str
    register: Register
    partition_in: bool
    particle_side: Side
    correlated: bool
    first_seen_step: int
    detected_step: int

    @property
    def period(self) -> int:
        return self.detected_step - self.first_seen_step


@dataclass(frozen=True)
class RunReport:
    """Outcome of one simulated demon run."""

    ledger: WorkLedger
    steps: int
    termination: Termination
    livelock_witness: LivelockWitness | None = None
    gas_entropy: float = 0.0
    mean_net_per_cycle: float | None = None
    stderr_net_per_cycle: float | None = None
    protocol_error: str | None = None
    first_unprofitable_measure_step: int | None = None
    code_length: int | None = None
    profitable_count: int | None = None

    def __post_init__(self):
        if self.termination is Termination.LIVELOCK and self.livelock_witness is None:
            raise ValidationError("livelock verdict requires a witness")


def step(world: EngineWorld, demon: DemonState, policy: Policy,
         ledger: WorkLedger, rng: np.random.Generator
         ) -> tuple[EngineWorld, DemonState, WorkLedger, Action]:
    """Apply one policy-chosen action to the engine.

    The policy is consulted with (pc, register) only.  Engine-side
    preconditions raise ProtocolError; Halt returns everything unchanged.
    """
    action, next_pc = policy.table[(demon.pc, demon.register)]
    if action is Action.HALT:
        return world, demon, ledger, action
    if action is Action.INSERT_PARTITION:
        world = insert_partition(world, rng)
        ledger = replace(ledger, cycles=ledger.cycles + 1)
    elif action is Action.MEASURE:
        world, demon = measure(world, demon)
        ledger = replace(ledger, erasure_debt=ledger.erasure_debt + 1)
    elif action is Action.UNDO_MEASURE:
        world, demon = undo_measurement(world, demon)
        ledger = replace(ledger, erasure_debt=ledger.erasure_debt - 1)
    elif action is Action.EXPAND:
        world, work = isothermal_expansion(world, demon)
        ledger = replace(ledger, extracted=ledger.extracted + work)
    elif action is Action.EXTRACT_PARTITION:
        world = extract_partition(world)
    elif action is Action.ERASE:
        if demon.register is not Register.BLANK:
            demon, ledger = erase(demon, ledger, 1)
        # erasing a blank register is a free no-op for a policy
    demon = replace(demon, pc=next_pc)
    return world, demon, ledger, action


def run_policy(geometry: EngineGeometry, policy: Policy, *,
               max_steps: int, seed: int | None = None,
               rng: np.random.Generator | None = None,
               trace: list | None = None) -> RunReport:
    """Drive a policy with livelock detection until it stops.

    A configuration (pc, register, engine core) seen twice with no random
    insertion in between proves an infinite loop; the visited set is
    cleared at every insertion because sampling breaks determinism.
    """
    if max_steps < 0:
        raise ValidationError("max_steps must be non-negative")
    if rng is None:
        rng = make_rng(0 if seed is None else seed)
    world = EngineWorld(geometry)
    demon = DemonState(register=Register.BLANK, pc=policy.start)
    ledger = WorkLedger()
    visited: dict = {}
    steps = 0
    termination = Termination.COMPLETED_CYCLES
    witness = None
    error = None
    first_unprofitable = None

    while True:
        if steps == max_steps:
            break
        config = (demon.pc, demon.register, world.partition_in,
                  world.particle_side, world.correlated)
        if config in visited:
            termination = Termination.LIVELOCK
            witness = LivelockWitness(
                pc=demon.pc, register=demon.register,
                partition_in=world.partition_in,
                particle_side=world.particle_side,
                correlated=world.correlated,
                first_seen_step=visited[config], detected_step=steps)
            break
        visited[config] = steps
        action, _ = policy.table[(demon.pc, demon.register)]
        if action is Action.HALT:
            termination = Termination.HALTED
            break
        before = ledger
        try:
            world, demon, ledger, action = step(world, demon, policy, ledger, rng)
        except ProtocolError as exc:
            termination = Termination.PROTOCOL_ERROR
            error = exc.kind
            break
        steps += 1
        if action is Action.INSERT_PARTITION:
            visited.clear()
        if (action is Action.MEASURE and first_unprofitable is None
                and net_cycle_work(geometry, world.particle_side) < 0.0):
            first_unprofitable = steps
        if trace is not None:
            trace.append({
                "step": steps,
                "cycle": ledger.cycles,
                "op": action.value,
                "side": (world.particle_side.value
                         if world.partition_in else None),
                "register": demon.register.value,
                "work_delta": ledger.extracted - before.extracted,
                "erasure_delta": ledger.erasure_paid - before.erasure_paid,
                "erasure_debt": ledger.erasure_debt,
                "gas_entropy": world.gas_entropy_offset,
            })

    return RunReport(
        ledger=ledger, steps=steps, termination=termination,
        livelock_witness=witness, gas_entropy=world.gas_entropy_offset,
        protocol_error=error,
        first_unprofitable_measure_step=first_unprofitable)


def _two_value_stats(n_left: int, n_right: int, value_left: float,
                     value_right: float) -> tuple[float, float | None]:
    """Mean and standard error of a two-valued per-cycle sample."""
    n = n_left + n_right
    mean = (n_left * value_left + n_right * value_right) / n
    if n < 2:
        return mean, None
    var = (n_left * (value_left - mean) ** 2
           + n_right * (value_right - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def run_standard_demon(geometry: EngineGeometry, cycles: int,
                       seed: int = 0,
                       rng: np.random.Generator | None = None) -> RunReport:
    """Insert, measure, expand, erase, ``cycles`` times.

    Vectorized but draw-for-draw identical to running standard_policy()
    through run_policy with the same generator.  Mean net work per cycle
    converges to expected_cycle_work(geometry).
    """
    if cycles < 1:
        raise ValidationError("cycles must be >= 1")
    if rng is None:
        rng = make_rng(seed)
    left = rng.random(cycles) < geometry.p_left
    n_left = int(left.sum())
    n_right = cycles - n_left
    w_left = geometry.expansion_work(Side.LEFT)
    w_right = geometry.expansion_work(Side.RIGHT)
    ledger = WorkLedger(extracted=n_left * w_left + n_right * w_right,
                        erasure_paid=float(cycles), erasure_debt=0.0,
                        cycles=cycles)
    mean, stderr = _two_value_stats(n_left, n_right, w_left - 1.0, w_right - 1.0)
    return RunReport(ledger=ledger, steps=4 * cycles,
                     termination=Termination.COMPLETED_CYCLES,
                     mean_net_per_cycle=mean, stderr_net_per_cycle=stderr,
                     profitable_count=n_left)


def run_demon_of_choice_undo_first(geometry: EngineGeometry, max_steps: int,
                                   seed: int = 0,
                                   rng: np.random.Generator | None = None,
                                   trace: list | None = None) -> RunReport:
    """Run the undo-first selective demon until livelock or budget end.

    Whenever the particle lands on the unprofitable side the run ends in a
    period-2 livelock within two steps of that measurement: undoing blanks
    the memory, the blank-memory demon measures again, and the
    configuration repeats.  No work is extracted and no erasure is paid on
    the livelocked branch.  Detection needs max_steps >= 4.
    """
    if max_steps < 4:
        raise ValidationError("need max_steps >= 4 to observe the two-step")
    report = run_policy(geometry, undo_first_policy(), max_steps=max_steps,
                        seed=seed, rng=rng, trace=trace)
    cycles = max(report.ledger.cycles, 1)
    return replace(report,
                   mean_net_per_cycle=report.ledger.net() / cycles)


def run_demon_of_choice_extract_first(geometry: EngineGeometry, cycles: int,
                                      seed: int = 0,
                                      rng: np.random.Generator | None = None
                                      ) -> RunReport:
    """Selective demon that frees unprofitable compartments, then erases.

    Profitable cycles net lg(L/ell) - 1 as usual; unprofitable ones post
    lg(L/(L-ell)) bits of gas entropy, extract nothing, and still pay the
    full kT-bit of erasure.  The mean net per cycle,
    p(lg(L/ell) - 1) - (1-p), sits strictly below the standard demon's
    whenever ell != L/2: refusing the small expansion made things worse.
    """
    if cycles < 1:
        raise ValidationError("cycles must be >= 1")
    if rng is None:
        rng = make_rng(seed)
    left = rng.random(cycles) < geometry.p_left
    n_left = int(left.sum())
    n_right = cycles - n_left
    w_left = geometry.expansion_work(Side.LEFT)
    free_gain = geometry.expansion_work(Side.RIGHT)  # forfeited work, in bits
    ledger = WorkLedger(extracted=n_left * w_left,
                        erasure_paid=float(cycles), erasure_debt=0.0,
                        cycles=cycles)
    mean, stderr = _two_value_stats(n_left, n_right, w_left - 1.0, -1.0)
    return RunReport(ledger=ledger, steps=4 * cycles,
                     termination=Termination.COMPLETED_CYCLES,
                     gas_entropy=n_right * free_gain,
                     mean_net_per_cycle=mean, stderr_net_per_cycle=stderr,
                     profitable_count=n_left)


def run_delayed_erasure_demon(geometry: EngineGeometry, n_cycles: int,
                              seed: int = 0,
                              rng: np.random.Generator | None = None
                              ) -> RunReport:
    """Bank outcomes on a tape for N cycles, then compress and erase.

    Each cycle extracts its expansion work and parks the outcome bit (1 =
    profitable) on the tape instead of paying per-cycle erasure; the debt
    grows to N bits.  Afterwards the tape is reversibly compressed to its
    enumerative codeword and only those ceil(lg(N+1)) + ceil(lg C(N,k))
    bits are erased.  The extracted work averages h(p) per cycle and the
    erasure cost is at least N h(k/N) bits, so the demon approaches break
    even from below as N grows; it never goes into profit on average.
    """
    if n_cycles < 1:
        raise ValidationError("need at least one cycle")
    if rng is None:
        rng = make_rng(seed)
    left = rng.random(n_cycles) < geometry.p_left
    k = int(left.sum())
    w_left = geometry.expansion_work(Side.LEFT)
    w_right = geometry.expansion_work(Side.RIGHT)
    extracted = k * w_left + (n_cycles - k) * w_right
    code_bits = codeword_length(n_cycles, k)
    ledger = WorkLedger(extracted=extracted, erasure_paid=float(code_bits),
                        erasure_debt=0.0, cycles=n_cycles)
    return RunReport(ledger=ledger, steps=3 * n_cycles + 2,
                     termination=Termination.COMPLETED_CYCLES,
                     mean_net_per_cycle=ledger.net() / n_cycles,
                     code_length=code_bits, profitable_count=k)


def find_seeds_forcing_side(geometry: EngineGeometry, side: Side, count: int,
                            start_seed: int = 0) -> list:
    """Scan integer seeds until ``count`` of them open on ``side``."""
    seeds = []
    seed = start_seed
    want_left = side is Side.LEFT
    while len(seeds) < count:
        if (make_rng(seed).random() < geometry.p_left) == want_left:
            seeds.append(seed)
        seed += 1
    return seeds


# --------------------------------------------------------------------------
# Exhaustive small-policy search.
#
# Compact integer encoding used only inside the search:
#   registers: 0 blank, 1 left, 2 right
#   worlds:    0 partition out; 1/2 in+left/right uncorrelated;
#              3/4 in+left/right correlated
#   actions:   indices into _ACTION_ORDER
# Runs are deterministic between insertions, so a run is a chain of
# deterministic segments joined by random side draws.  Segments are
# memoized per policy; expectation values come from exact dynamic
# programming over the segment graph and Monte Carlo values from walking
# the same graph with common random numbers.
# --------------------------------------------------------------------------

_ACTION_ORDER = (Action.INSERT_PARTITION, Action.MEASURE, Action.UNDO_MEASURE,
                 Action.EXPAND, Action.EXTRACT_PARTITION, Action.ERASE,
                 Action.HALT)
_A_INSERT, _A_MEASURE, _A_UNDO, _A_EXPAND, _A_EXTRACT, _A_ERASE, _A_HALT = range(7)

_W_OUT = 0
_SIDE_OF_WORLD = {1: 1, 2: 2, 3: 1, 4: 2}  # world -> register value of its side


@dataclass(frozen=True)
class SearchReport:
    """Result of exhausting a bounded policy space."""

    states: int
    horizon: int
    seed_count: int
    behaviours_explored: int
    invalid_designs: int
    full_table_count: int
    best_dp_value: float
    best_policy: Policy
    max_crn_mean: float
    max_crn_stderr: float
    crn_policies_evaluated: int
    second_law_ok: bool


class _SegmentMachine:
    """Deterministic-segment simulator for one encoded policy table.

    A node is a segment entry (pc, reg, world, t).  Simulation runs until
    the policy halts, livelocks, hits the horizon, commands an impossible
    operation, or asks to insert the partition; in the last case the
    successor nodes for both sides are reported.

    Scoring is strictly at the horizon: a halted demon keeps its memory
    state until then, and a livelocked demon is fast-forwarded around its
    loop (whose per-period net is never positive: a randomness-free loop
    cannot contain a successful expansion after its first pass) so the
    debt charge sees the register exactly as the horizon finds it.  A
    demon that commands an impossible operation is not an implementable
    design at all: the segment reports it as invalid.
    """

    def __init__(self, table: dict, horizon: int, w_left: float, w_right: float):
        self.table = table
        self.horizon = horizon
        self.work = {1: w_left, 2: w_right, 3: w_left, 4: w_right}
        self.segments: dict = {}

    def segment(self, entry: tuple):
        """(net_delta, kind, payload) with kind 'end', 'insert', 'query'
        or 'invalid'.

        'end' payload is the register at the horizon (for the debt
        charge); 'insert' payload is (entry_left, entry_right) at the
        post-insert time step.
        """
        cached = self.segments.get(entry)
        if cached is not None:
            return cached
        pc, reg, world, t = entry
        net = 0.0
        seen: dict = {}
        while True:
            if t == self.horizon:
                result = (net, "end", reg)
                break
            config = (pc, reg, world)
            if config in seen:
                result = self._fast_forward(config, seen[config], (t, net))
                break
            seen[config] = (t, net)
            choice = self.table.get((pc, reg))
            if choice is None:
                result = (net, "query", (pc, reg))
                break
            action, nxt = choice
            if action == _A_HALT:
                result = (net, "end", reg)  # memory frozen until the horizon
                break
            if action == _A_INSERT:
                if world != _W_OUT:
                    result = (net, "invalid", None)
                    break
                result = (net, "insert",
                          ((nxt, reg, 1, t + 1), (nxt, reg, 2, t + 1)))
                break
            world2, reg2, dnet, ok = self._apply(action, world, reg)
            if not ok:
                result = (net, "invalid", None)
                break
            world, reg, net = world2, reg2, net + dnet
            pc = nxt
            t += 1
        self.segments[entry] = result
        return result

    def _fast_forward(self, config: tuple, first: tuple, now: tuple):
        """Run a detected livelock loop out to the horizon, exactly."""
        t_first, net_first = first
        t_now, net_now = now
        period = t_now - t_first
        loop_net = net_now - net_first  # never positive
        remaining = self.horizon - t_now
        full, residue = divmod(remaining, period)
        pc, reg, world = config
        net = net_now + full * loop_net
        for _ in range(residue):
            action, nxt = self.table[(pc, reg)]
            world, reg, dnet, ok = self._apply(action, world, reg)
            assert ok, "a detected loop cannot contain an impossible action"
            net += dnet
            pc = nxt
        return (net, "end", reg)

    def _apply(self, action: int, world: int, reg: int):
        """Deterministic action semantics; mirrors the engine operations."""
        if action == _A_MEASURE:
            if world == _W_OUT or reg != 0:
                return world, reg, 0.0, False
            side = _SIDE_OF_WORLD[world]
            return side + 2, side, 0.0, True  # correlated world, record written
        if action == _A_UNDO:
            # the correlation is only unwindable while the record is intact
            if world not in (3, 4) or reg == 0:
                return world, reg, 0.0, False
            return world - 2, 0, 0.0, True
        if action == _A_EXPAND:
            # the piston needs a live record that matches the particle
            if world not in (3, 4) or reg != _SIDE_OF_WORLD[world]:
                return world, reg, 0.0, False
            return _W_OUT, reg, self.work[world], True
        if action == _A_EXTRACT:
            if world == _W_OUT:
                return world, reg, 0.0, False
            return _W_OUT, reg, 0.0, True
        if action == _A_ERASE:
            if reg == 0:
                return world, reg, 0.0, True  # free no-op
            return world, 0, -1.0, True
        raise AssertionError(f"unhandled action {action}")


def _first_query(machine: _SegmentMachine, root: tuple):
    """First (pc, reg) the partial table cannot answer, reachable from root."""
    seen = set()
    stack = [root]
    while stack:
        entry = stack.pop()
        if entry in seen:
            continue
        seen.add(entry)
        _, kind, payload = machine.segment(entry)
        if kind == "query":
            return payload
        if kind == "insert":
            stack.extend(payload)
    return None


def _dp_value(machine: _SegmentMachine, root: tuple, p_left: float) -> float:
    """Exact expected debt-charged net work from ``root``.

    -inf marks an invalid design: some reachable branch commands an
    impossible operation, so the policy cannot be implemented at all.
    """
    memo: dict = {}

    def value(entry: tuple) -> float:
        got = memo.get(entry)
        if got is not None:
            return got
        net, kind, payload = machine.segment(entry)
        if kind == "end":
            v = net - (1.0 if payload != 0 else 0.0)
        elif kind == "invalid":
            v = -math.inf
        else:  # insert
            left_entry, right_entry = payload
            v = net + p_left * value(left_entry) + (1 - p_left) * value(right_entry)
        memo[entry] = v
        return v

    return value(root)


def _crn_values(machine: _SegmentMachine, root: tuple,
                side_is_left: np.ndarray) -> np.ndarray:
    """Debt-charged net work per seed, all seeds sharing the side draws.

    ``side_is_left`` has shape (seeds, max_insertions); column j is the
    outcome of every run's j-th insertion.  The walk advances all seeds
    one insertion at a time over the segment graph.
    """
    nodes: list = []
    index: dict = {}

    def node_id(entry: tuple) -> int:
        got = index.get(entry)
        if got is not None:
            return got
        nid = len(nodes)
        index[entry] = nid
        nodes.append(None)  # reserve before recursing
        net, kind, payload = machine.segment(entry)
        if kind == "end":
            nodes[nid] = (net - (1.0 if payload != 0 else 0.0), -1, -1)
        elif kind == "invalid":
            nodes[nid] = (-math.inf, -1, -1)
        else:
            left_entry, right_entry = payload
            nodes[nid] = (net, node_id(left_entry), node_id(right_entry))
        return nid

    root_id = node_id(root)
    add = np.array([n[0] for n in nodes])
    left_child = np.array([n[1] for n in nodes], dtype=np.int64)
    right_child = np.array([n[2] for n in nodes], dtype=np.int64)

    n_seeds = side_is_left.shape[0]
    current = np.full(n_seeds, root_id, dtype=np.int64)
    values = np.zeros(n_seeds)
    alive = np.ones(n_seeds, dtype=bool)
    for depth in range(side_is_left.shape[1]):
        if not alive.any():
            break
        cur = current[alive]
        values[alive] += add[cur]
        nxt = np.where(side_is_left[alive, depth], left_child[cur],
                       right_child[cur])
        terminal = left_child[cur] < 0
        still = ~terminal
        alive_idx = np.flatnonzero(alive)
        current[alive_idx[still]] = nxt[still]
        alive[alive_idx[terminal]] = False
    if alive.any():  # ran out of insertion columns: finish terminal nodes
        cur = current[alive]
        values[alive] += add[cur]
        if not (left_child[cur] < 0).all():
            raise AssertionError("insertion budget exceeded in CRN walk")
    return values


def _policy_from_encoded(table: dict, states: int, name: str) -> Policy:
    labels = tuple(f"s{i}" for i in range(states))
    regs = (Register.BLANK, Register.LEFT, Register.RIGHT)
    entries = {}
    for (pc, reg), (action, nxt) in table.items():
        entries[(labels[pc], regs[reg])] = (_ACTION_ORDER[action], labels[nxt])
    return make_policy(name, labels, labels[0], entries)


def _policy_to_encoded(policy: Policy) -> dict:
    states = {pc: i for i, pc in enumerate(policy.control_states)}
    regs = {Register.BLANK: 0, Register.LEFT: 1, Register.RIGHT: 2}
    actions = {a: i for i, a in enumerate(_ACTION_ORDER)}
    return {(states[pc], regs[reg]): (actions[action], states[nxt])
            for (pc, reg), (action, nxt) in policy.table.items()}


@dataclass(frozen=True)
class PolicyEvaluation:
    """Horizon-end scoring of one policy, exact and sampled.

    ``expected_net`` is the exact debt-charged expectation (−inf for a
    design that can command an impossible operation on some reachable
    branch); ``crn_values`` holds the per-seed sampled values under the
    shared side draws (−inf on seeds that hit the impossible command).
    """

    expected_net: float
    crn_mean: float
    crn_stderr: float
    crn_values: tuple


def evaluate_policy(geometry: EngineGeometry, policy: Policy, *,
                    horizon: int, seed_count: int,
                    seed: int = 0) -> PolicyEvaluation:
    """Score one policy exactly as the exhaustive search would.

    Uses the same horizon-end accounting as enumerate_policies: memory
    occupied at the horizon costs 1 kT-bit per bit, halted and livelocked
    runs are carried to the horizon, impossible commands mark the design
    invalid.  The start state must be the first declared control state.
    """
    if horizon < 1 or seed_count < 1:
        raise ValidationError("horizon and seed_count must be >= 1")
    if policy.start != policy.control_states[0]:
        raise ValidationError("start state must be declared first")
    table = _policy_to_encoded(policy)
    machine = _SegmentMachine(table, horizon,
                              geometry.expansion_work(Side.LEFT),
                              geometry.expansion_work(Side.RIGHT))
    root = (0, 0, _W_OUT, 0)
    expected = _dp_value(machine, root, geometry.p_left)
    max_insertions = horizon // 2 + 2
    side_is_left = np.empty((seed_count, max_insertions), dtype=bool)
    for s in range(seed_count):
        side_is_left[s] = (trial_rng(seed, s).random(max_insertions)
                           < geometry.p_left)
    values = _crn_values(machine, root, side_is_left)
    finite = np.isfinite(values)
    mean = float(values.mean()) if finite.all() else -math.inf
    stderr = float(values.std(ddof=1) / math.sqrt(seed_count)) \
        if finite.all() and seed_count > 1 else 0.0
    return PolicyEvaluation(expected_net=float(expected), crn_mean=mean,
                            crn_stderr=stderr,
                            crn_values=tuple(float(v) for v in values))


def enumerate_policies(geometry: EngineGeometry, max_control_states: int,
                       horizon: int, seed_count: int, *, seed: int = 0,
                       max_behaviours: int = 10 ** 6,
                       crn_limit: int = 50_000) -> SearchReport:
    """Exhaust every distinct policy behaviour within the bounds.

    Policies are enumerated lazily: transition entries are fixed only when
    a simulated run first consults them, so transition tables differing
    only on unreachable entries count once.  Every behaviour gets an exact
    expected value by dynamic programming; behaviours are then compared by
    Monte Carlo with common random numbers (shared side draws across
    policies), and the best sampled mean is tested against 0 at three
    standard errors.

    Scoring rules, all applied at the horizon:

    * memory still occupied at the horizon is charged 1 kT-bit per bit, so
      strategies that never erase cannot masquerade as winners;
    * halted and livelocked demons keep evolving trivially until the
      horizon (a livelock loop never has positive net per period), and the
      debt charge sees their memory exactly as the horizon finds it;
    * a policy that ever commands a mechanically impossible operation on a
      reachable branch is not an implementable demon; such designs are
      counted in ``invalid_designs`` and excluded from the competition.
    """
    if not 1 <= max_control_states <= 3:
        raise ValidationError("control-state bound must be 1..3")
    if horizon < 1 or seed_count < 1:
        raise ValidationError("horizon and seed_count must be >= 1")
    states = max_control_states
    full_tables = (7 * states) ** (states * 3)
    w_left = geometry.expansion_work(Side.LEFT)
    w_right = geometry.expansion_work(Side.RIGHT)
    root = (0, 0, _W_OUT, 0)
    choices = [(a, s) for a in range(7) for s in range(states)]

    behaviours: list = []
    table: dict = {}

    def explore():
        machine = _SegmentMachine(table, horizon, w_left, w_right)
        query = _first_query(machine, root)
        if query is None:
            behaviours.append(dict(table))
            if len(behaviours) > max_behaviours:
                raise SearchSpaceError(len(behaviours), max_behaviours)
            return
        for choice in choices:
            table[query] = choice
            explore()
        del table[query]

    explore()

    # Exact expectation for every behaviour; invalid designs score -inf.
    p_left = geometry.p_left
    dp_values = np.empty(len(behaviours))
    for i, tab in enumerate(behaviours):
        machine = _SegmentMachine(tab, horizon, w_left, w_right)
        dp_values[i] = _dp_value(machine, root, p_left)
    valid = np.flatnonzero(np.isfinite(dp_values))
    if valid.size == 0:
        raise ValidationError("no implementable policy in the search space")
    order = valid[np.argsort(-dp_values[valid], kind="stable")]
    best_dp = float(dp_values[order[0]])

    # Common random numbers: one shared matrix of side draws.
    max_insertions = horizon // 2 + 2
    side_is_left = np.empty((seed_count, max_insertions), dtype=bool)
    for s in range(seed_count):
        side_is_left[s] = trial_rng(seed, s).random(max_insertions) < p_left

    candidates = order[:crn_limit]
    max_mean = -math.inf
    max_stderr = 0.0
    argmax_table = behaviours[int(order[0])]
    for i in candidates:
        machine = _SegmentMachine(behaviours[int(i)], horizon, w_left, w_right)
        values = _crn_values(machine, root, side_is_left)
        mean = float(values.mean())
        if mean > max_mean:
            max_mean = mean
            max_stderr = float(values.std(ddof=1) / math.sqrt(seed_count)
                               if seed_count > 1 else 0.0)
            argmax_table = behaviours[int(i)]

    best_policy = _policy_from_encoded(argmax_table, states, "search-best")
    return SearchReport(
        states=states, horizon=horizon, seed_count=seed_count,
        behaviours_explored=len(behaviours),
        invalid_designs=int(len(behaviours) - valid.size),
        full_table_count=full_tables,
        best_dp_value=best_dp, best_policy=best_policy,
        max_crn_mean=max_mean, max_crn_stderr=max_stderr,
        crn_policies_evaluated=len(candidates),
        second_law_ok=max_mean <= 3.0 * max_stderr,
    )
