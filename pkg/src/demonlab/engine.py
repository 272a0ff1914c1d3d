"""Single-particle engine (Gabor geometry) with exact work accounting.

One particle in a box of length L at temperature T.  Inserting a partition
creates a small compartment of length ell on the left; catching the
particle there is the rare profitable fluctuation.  A measurement copies
the particle's side into the demon's memory register; an isothermal
expansion converts that record into work; erasing the record costs work.

Units: all work is in kT-bits (1 kT-bit = k_B T ln 2 joules) and all
entropy in bits, so with base-2 logarithms the bookkeeping is exact:

    expansion from compartment w:   + lg(L/w)   kT-bits of work
    erasure of one memory bit:      - 1         kT-bit (Landauer price)
    free expansion from w:          + lg(L/w)   bits of gas entropy, no work

State objects are immutable; transitions return new values, so Monte Carlo
trials can run concurrently without sharing anything but the geometry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import BlankEraseWarning, ProtocolError, ValidationError


class Side(Enum):
    """Where the particle is: a compartment, or the whole box."""

    LEFT = "Left"
    RIGHT = "Right"
    ANYWHERE = "Anywhere"


class Register(Enum):
    """Content of the demon's one-cycle memory register."""

    BLANK = "Blank"
    LEFT = "Left"
    RIGHT = "Right"


_SIDE_TO_REGISTER = {Side.LEFT: Register.LEFT, Side.RIGHT: Register.RIGHT}


@dataclass(frozen=True)
class EngineGeometry:
    """Box of length ``box`` with a small left compartment of length ``ell``."""

    box: float
    ell: float

    def __post_init__(self):
        if not (0.0 < self.ell < self.box):
            raise ValidationError(
                f"need 0 < ell < L, got ell={self.ell}, L={self.box}")

    @classmethod
    def from_ratio(cls, ell_over_l: float) -> "EngineGeometry":
        return cls(box=1.0, ell=float(ell_over_l))

    @property
    def p_left(self) -> float:
        """Probability of catching the particle in the small compartment."""
        return self.ell / self.box

    def compartment(self, side: Side) -> float:
        if side is Side.LEFT:
            return self.ell
        if side is Side.RIGHT:
            return self.box - self.ell
        raise ValidationError("particle is not confined to one compartment")

    def expansion_work(self, side: Side) -> float:
        """Isothermal work lg(L/w) from compartment w, in kT-bits."""
        return math.log2(self.box / self.compartment(side))


@dataclass(frozen=True)
class EngineWorld:
    """Engine configuration between transitions.

    ``correlated`` records whether the demon's register still mirrors the
    particle's side; a removed partition always destroys the correlation.
    ``gas_entropy_offset`` accumulates the irreversible entropy of free
    expansions, in bits, relative to one particle in the full box.
    """

    geometry: EngineGeometry
    particle_side: Side = Side.ANYWHERE
    partition_in: bool = False
    correlated: bool = False
    gas_entropy_offset: float = 0.0

    def __post_init__(self):
        if self.correlated and not self.partition_in:
            raise ValidationError("correlation cannot outlive the partition")
        if (self.particle_side is Side.ANYWHERE) == self.partition_in:
            raise ValidationError(
                "particle side is 'Anywhere' exactly when the partition is out")


@dataclass(frozen=True)
class DemonState:
    """Demon memory: one live register, an archive tape, a control label.

    ``pc`` is the policy's internal control state; it never sees the
    engine.  ``tape`` stores banked outcome bits for delayed-erasure
    operation (1 = profitable).
    """

    register: Register = Register.BLANK
    pc: str = "start"
    tape: tuple = ()

    def occupied_bits(self) -> int:
        return (0 if self.register is Register.BLANK else 1) + len(self.tape)


@dataclass(frozen=True)
class WorkLedger:
    """Running totals of one engine history, all in kT-bits.

    ``erasure_debt`` counts memory bits still occupied: work that must
    eventually be paid to return the demon to a truly cyclic (blank)
    state.  Merging ledgers of independent trials is plain field-wise
    addition.
    """

    extracted: float = 0.0
    erasure_paid: float = 0.0
    erasure_debt: float = 0.0
    cycles: int = 0

    def __post_init__(self):
        if self.erasure_paid < 0 or self.erasure_debt < 0:
            raise ValidationError("erasure totals cannot be negative")

    def net(self) -> float:
        return self.extracted - self.erasure_paid

    def debt_charged_net(self) -> float:
        """Net work once outstanding memory is priced at 1 kT-bit per bit."""
        return self.net() - self.erasure_debt

    def entropy_balance(self, gas_entropy_offset: float = 0.0) -> float:
        """Entropy handed to the rest of the universe, in bits.

        Heat dumped by erasure raises the bath entropy, extracted work
        lowers it, and free expansions raise the gas entropy.  Over any
        ensemble of completed cycles this is non-negative.
        """
        return self.erasure_paid - self.extracted + gas_entropy_offset

    def merge(self, other: "WorkLedger") -> "WorkLedger":
        return WorkLedger(
            extracted=self.extracted + other.extracted,
            erasure_paid=self.erasure_paid + other.erasure_paid,
            erasure_debt=self.erasure_debt + other.erasure_debt,
            cycles=self.cycles + other.cycles,
        )


def insert_partition(world: EngineWorld, rng: np.random.Generator) -> EngineWorld:
    """Drop the partition in; the particle is caught on a random side.

    Zero work: the partition is inserted where the potential is flat.
    The side is Left with probability ell/L.
    """
    if world.partition_in:
        raise ProtocolError("partition-already-in",
                            "cannot insert: the partition is already in place")
    side = Side.LEFT if rng.random() < world.geometry.p_left else Side.RIGHT
    return replace(world, partition_in=True, particle_side=side)


def measure(world: EngineWorld, memory: DemonState) -> tuple[EngineWorld, DemonState]:
    """Copy the particle's side into the demon's blank register.

    Free of charge and fully reversible: it only correlates the register
    with the side.  Requires a blank register; a demon whose memory is
    full must erase (and pay) before it can look again.
    """
    if not world.partition_in:
        raise ProtocolError("partition-absent",
                            "nothing to measure: no partition, no compartments")
    if memory.register is not Register.BLANK:
        raise ProtocolError("must-erase-first",
                            "register already holds a record")
    new_memory = replace(memory, register=_SIDE_TO_REGISTER[world.particle_side])
    return replace(world, correlated=True), new_memory


def undo_measurement(world: EngineWorld,
                     memory: DemonState) -> tuple[EngineWorld, DemonState]:
    """Reverse the measurement: blank the register at zero cost.

    Only possible while the record still mirrors the particle; once the
    correlation is gone the record can no longer be unwound reversibly.
    Undoing does not undo the engine: the particle stays where it is.
    """
    if not world.correlated:
        raise ProtocolError("correlation-lost",
                            "no intact correlation left to unwind")
    if memory.register is Register.BLANK:
        raise ProtocolError("correlation-lost",
                            "correlated world but blank register")
    return (replace(world, correlated=False),
            replace(memory, register=Register.BLANK))


def isothermal_expansion(world: EngineWorld,
                         memory: DemonState) -> tuple[EngineWorld, float]:
    """Turn the partition into a piston and expand to the full box.

    Extracts lg(L/w) kT-bits from the heat bath, where w is the occupied
    compartment.  The record sets the piston direction, so an intact,
    matching correlation is mandatory.  The register keeps its now stale
    record: the erasure bill is still outstanding.
    """
    if not world.partition_in:
        raise ProtocolError("partition-absent", "no partition to expand against")
    if not world.correlated:
        raise ProtocolError("uncorrelated-expansion",
                            "piston direction unknown without a live record")
    if memory.register is not _SIDE_TO_REGISTER[world.particle_side]:
        raise ProtocolError("record-mismatch",
                            "record disagrees with the particle's side")
    work = world.geometry.expansion_work(world.particle_side)
    new_world = replace(world, partition_in=False, particle_side=Side.ANYWHERE,
                        correlated=False)
    return new_world, work


def extract_partition(world: EngineWorld) -> EngineWorld:
    """Pull the partition straight out: free expansion, no work.

    The gas spreads irreversibly into the full box, gaining lg(L/w) bits
    of entropy, and any correlation with the demon's memory is squandered.
    """
    if not world.partition_in:
        raise ProtocolError("partition-absent", "no partition to extract")
    entropy_gain = math.log2(
        world.geometry.box / world.geometry.compartment(world.particle_side))
    return replace(world, partition_in=False, particle_side=Side.ANYWHERE,
                   correlated=False,
                   gas_entropy_offset=world.gas_entropy_offset + entropy_gain)


def erase(memory: DemonState, ledger: WorkLedger,
          nbits: int) -> tuple[DemonState, WorkLedger]:
    """Blank ``nbits`` of occupied memory at 1 kT-bit per bit.

    The register is blanked first, then the tape.  Erasing blank memory is
    a free no-op (with a warning: it is usually a policy bug).
    """
    if nbits < 0:
        raise ValidationError("cannot erase a negative number of bits")
    if nbits == 0:
        return memory, ledger
    occupied = memory.occupied_bits()
    if occupied == 0:
        warnings.warn("erasing blank memory: no-op, no cost", BlankEraseWarning)
        return memory, ledger
    if nbits > occupied:
        raise ProtocolError("erase-overdraw",
                            f"asked to erase {nbits} of {occupied} occupied bits")
    remaining = nbits
    new_register = memory.register
    if new_register is not Register.BLANK:
        new_register = Register.BLANK
        remaining -= 1
    new_tape = memory.tape[:len(memory.tape) - remaining]
    new_ledger = replace(ledger,
                         erasure_paid=ledger.erasure_paid + nbits,
                         erasure_debt=ledger.erasure_debt - nbits)
    return replace(memory, register=new_register, tape=new_tape), new_ledger


def net_cycle_work(geometry: EngineGeometry, side: Side) -> float:
    """Net work of one completed cycle ending on ``side``, in kT-bits.

    Expansion work minus the 1 kT-bit erasure of the one-bit record:
    lg(L/ell) - 1 on the profitable side, lg(L/(L-ell)) - 1 (negative)
    on the unprofitable one.
    """
    return geometry.expansion_work(side) - 1.0


def expected_cycle_work(geometry: EngineGeometry) -> float:
    """Mean net work per completed measure-expand-erase cycle.

    Equals -(1 + p lg p + q lg q) with p = ell/L: the erasure bit costs 1
    while the average expansion only returns the binary entropy h(p).
    Zero exactly at the Szilard point ell = L/2, negative elsewhere.
    """
    p = geometry.p_left
    q = 1.0 - p
    return -(1.0 + p * math.log2(p) + q * math.log2(q))


def physical_entropy(statistical_bits: float, algorithmic_bits: float) -> float:
    """Total entropy Z = H + K: ensemble ignorance plus record size.

    H is what the owner of the records does not know; K is what storing
    the records costs.  Z prices the work still extractable from a system:
    measurements trade H for K and cannot lower the sum on average.
    """
    if statistical_bits < 0 or algorithmic_bits < 0:
        raise ValidationError("entropies cannot be negative")
    return statistical_bits + algorithmic_bits


def extractable_work(z_before: float, z_after: float) -> float:
    """Work ceiling from a drop in physical entropy, in kT-bits."""
    return z_before - z_after


@dataclass(frozen=True)
class MeasurementBudget:
    """Entropy ledger of one ensemble-averaged measurement.

    The ignorance drop ``delta_h`` is what the expansion can monetize; the
    record growth is what erasure will charge.  With a fixed one-bit
    register the record costs a full bit (``delta_z_fixed_register`` is
    then positive off the Szilard point: the engine runs at a loss); an
    optimally compressed ensemble record costs only h(p) and breaks even
    (``delta_z_minimal_record`` = 0).
    """

    delta_h: float
    delta_k_fixed_register: float
    delta_k_minimal_record: float

    @property
    def delta_z_fixed_register(self) -> float:
        return self.delta_h + self.delta_k_fixed_register

    @property
    def delta_z_minimal_record(self) -> float:
        return self.delta_h + self.delta_k_minimal_record


def measurement_budget(weights: Sequence[float],
                       record_bits: float = 1.0) -> MeasurementBudget:
    """Entropy budget of measuring an outcome with the given distribution."""
    from .infotheory import shannon_entropy

    h = shannon_entropy(weights)
    return MeasurementBudget(
        delta_h=-h,
        delta_k_fixed_register=float(record_bits),
        delta_k_minimal_record=h,
    )
