"""Entropy, mutual information, and projective-measurement primitives.

Everything is base-2: entropies are in bits, and one bit of erased memory
costs one kT-bit of work (k_B T ln 2 joules) downstream in the engine
accounting.  Density matrices are small (dim <= 64) dense complex arrays,
so plain eigendecompositions are always affordable.

Composite system-demon states use system-major index ordering throughout:
joint basis index = s * dim_demon + d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ValidationError

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10  # more negative than this -> genuinely invalid state
MAX_DIM = 64


def _entropy_of_probabilities(p: np.ndarray) -> float:
    """-sum p lg p with the 0 lg 0 = 0 convention, p assumed clean."""
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def validate_distribution(weights: Sequence[float]) -> np.ndarray:
    """Check a probability vector: non-negative entries summing to 1."""
    p = np.asarray(weights, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError("probability vector must be non-empty and 1-D")
    if np.any(p < 0.0):
        raise ValidationError(f"negative probability: min entry {p.min()}")
    total = float(p.sum())
    if abs(total - 1.0) > TRACE_TOL:
        raise ValidationError(f"probabilities sum to {total!r}, not 1")
    return p


def shannon_entropy(weights: Sequence[float]) -> float:
    """Shannon entropy -sum p_i lg p_i in bits of a probability vector."""
    return _entropy_of_probabilities(validate_distribution(weights))


def binary_entropy(p: float) -> float:
    """h(p) = -p lg p - (1-p) lg(1-p) for p in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"binary entropy argument {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    q = 1.0 - p
    return -p * math.log2(p) - q * math.log2(q)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix.

    The constructor validates all three invariants; eigenvalues in
    [EIGENVALUE_FLOOR, 0) are treated as rounding noise and clamped to 0,
    anything more negative is rejected.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got {m.shape}")
        if m.shape[0] > MAX_DIM:
            raise ValidationError(f"dimension {m.shape[0]} exceeds cap {MAX_DIM}")
        if not np.allclose(m, m.conj().T, atol=HERMITICITY_TOL, rtol=0.0):
            raise ValidationError("matrix is not Hermitian")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"trace is {tr}, not 1")
        eig = np.linalg.eigvalsh(m)
        if eig.min() < EIGENVALUE_FLOOR:
            raise ValidationError(f"negative eigenvalue {eig.min()}: not a state")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Real spectrum, rounding noise clamped into [0, 1]."""
        eig = np.linalg.eigvalsh(self.matrix)
        return np.clip(eig, 0.0, None)

    @classmethod
    def diagonal(cls, weights: Sequence[float]) -> "DensityMatrix":
        return cls(np.diag(validate_distribution(weights)).astype(complex))

    @classmethod
    def pure(cls, amplitudes: Sequence[complex]) -> "DensityMatrix":
        v = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValidationError("zero vector cannot define a pure state")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def basis_state(cls, dim: int, index: int) -> "DensityMatrix":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls.pure(v)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        """Kronecker product, self as the system-major (left) factor."""
        return DensityMatrix(np.kron(self.matrix, other.matrix))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-Tr rho lg rho in bits, from the eigenvalue spectrum."""
    return _entropy_of_probabilities(rho.eigenvalues)


def partial_trace(rho: DensityMatrix, dim_system: int, dim_demon: int,
                  keep: str) -> DensityMatrix:
    """Reduce a joint state to one marginal.

    ``keep`` is "system" or "demon".  Index convention is system-major:
    joint index = s * dim_demon + d.
    """
    if dim_system * dim_demon != rho.dim:
        raise ValidationError(
            f"dimension mismatch: {dim_system}*{dim_demon} != {rho.dim}")
    r = rho.matrix.reshape(dim_system, dim_demon, dim_system, dim_demon)
    if keep == "system":
        reduced = np.einsum("sdtd->st", r)
    elif keep == "demon":
        reduced = np.einsum("sdse->de", r)
    else:
        raise ValidationError(f"keep must be 'system' or 'demon', got {keep!r}")
    return DensityMatrix(reduced)


def mutual_information(rho_joint: DensityMatrix, dim_system: int,
                       dim_demon: int) -> float:
    """I(S:D) = H(rho_D) + H(rho_S) - H(rho_SD) in bits."""
    rho_s = partial_trace(rho_joint, dim_system, dim_demon, keep="system")
    rho_d = partial_trace(rho_joint, dim_system, dim_demon, keep="demon")
    return (von_neumann_entropy(rho_d) + von_neumann_entropy(rho_s)
            - von_neumann_entropy(rho_joint))


def holevo_chi(weights: Sequence[float],
               components: Sequence[DensityMatrix]) -> float:
    """Holevo quantity H(sum p_i rho_i) - sum p_i H(rho_i) of an ensemble.

    Non-negative by concavity; tiny negative rounding (within the
    eigenvalue floor) is clamped to exactly 0.
    """
    p = validate_distribution(weights)
    if len(components) != p.size:
        raise ValidationError(
            f"{p.size} weights but {len(components)} component states")
    dims = {c.dim for c in components}
    if len(dims) != 1:
        raise ValidationError(f"components have mixed dimensions {sorted(dims)}")
    mixture = DensityMatrix(
        sum(pi * c.matrix for pi, c in zip(p, components)))
    chi = von_neumann_entropy(mixture) - float(
        sum(pi * von_neumann_entropy(c) for pi, c in zip(p, components) if pi > 0))
    if chi < EIGENVALUE_FLOOR:
        raise ValidationError(f"Holevo quantity {chi} below numerical floor")
    return max(chi, 0.0)


@dataclass(frozen=True)
class ProjectorSet:
    """Mutually exclusive, exhaustive family of orthogonal projectors."""

    projectors: tuple

    def __post_init__(self):
        projs = tuple(np.array(p, dtype=complex) for p in self.projectors)
        if not projs:
            raise ValidationError("projector set is empty")
        dim = projs[0].shape[0]
        for i, p in enumerate(projs):
            if p.shape != (dim, dim):
                raise ValidationError(f"projector {i} has shape {p.shape}")
            if not np.allclose(p, p.conj().T, atol=HERMITICITY_TOL, rtol=0.0):
                raise ValidationError(f"projector {i} is not Hermitian")
            if not np.allclose(p @ p, p, atol=HERMITICITY_TOL, rtol=0.0):
                raise ValidationError(f"projector {i} is not idempotent")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                overlap = abs(complex(np.trace(projs[i] @ projs[j])))
                if overlap > HERMITICITY_TOL:
                    raise ValidationError(
                        f"projectors {i},{j} overlap: Tr(PiPj)={overlap}")
        total = sum(projs)
        if not np.allclose(total, np.eye(dim), atol=HERMITICITY_TOL, rtol=0.0):
            raise ValidationError("projectors do not sum to the identity")
        for p in projs:
            p.setflags(write=False)
        object.__setattr__(self, "projectors", projs)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self) -> int:
        return len(self.projectors)

    @classmethod
    def computational(cls, dim: int) -> "ProjectorSet":
        """Rank-1 projectors onto the standard basis."""
        eye = np.eye(dim, dtype=complex)
        return cls(tuple(np.outer(eye[i], eye[i]) for i in range(dim)))

    def outcome_probabilities(self, rho: DensityMatrix) -> np.ndarray:
        p = np.array([np.trace(P @ rho.matrix).real for P in self.projectors])
        return np.clip(p, 0.0, None)

    def commutes_with(self, rho: DensityMatrix, tol: float = 1e-12) -> bool:
        """True when every projector commutes with the state."""
        m = rho.matrix
        return all(
            np.max(np.abs(P @ m - m @ P)) <= tol for P in self.projectors)


@dataclass(frozen=True)
class MeasurementUnitary:
    """Controlled-not style record-writing unitary on system x demon.

    Acts as: on the system branch of projector P_i, swap the demon basis
    states |blank> <-> |record_i>, leaving every uninvolved demon basis
    state alone.  Swaps are involutions, so U is unitary and U^2 = 1:
    applying it twice unwrites the record.
    """

    matrix: np.ndarray
    dim_system: int
    dim_demon: int
    blank_index: int
    record_indices: tuple

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.dim_system * self.dim_demon

    def apply(self, rho_joint: DensityMatrix) -> DensityMatrix:
        u = self.matrix
        return DensityMatrix(u @ rho_joint.matrix @ u.conj().T)

    def involution_defect(self) -> float:
        """max |U^2 - 1|, which should sit at rounding level."""
        u2 = self.matrix @ self.matrix
        return float(np.max(np.abs(u2 - np.eye(self.dim))))

    def unitarity_defect(self) -> float:
        uu = self.matrix @ self.matrix.conj().T
        return float(np.max(np.abs(uu - np.eye(self.dim))))


def build_measurement_unitary(projs: ProjectorSet, blank_index: int,
                              record_indices: Sequence[int],
                              dim_demon: int | None = None) -> MeasurementUnitary:
    """Assemble the record-writing unitary for a projector family.

    ``record_indices[i]`` is the demon basis state that registers outcome i;
    they must be pairwise distinct (records have to be distinguishable).  A
    record index equal to ``blank_index`` is allowed and means "write
    nothing" on that branch (a null record); the demon stays blank there.
    """
    records = tuple(int(i) for i in record_indices)
    if len(records) != len(projs):
        raise ValidationError(
            f"{len(projs)} projectors but {len(records)} record states")
    if len(set(records)) != len(records):
        raise ValidationError("record states must be distinct (orthogonal)")
    if dim_demon is None:
        dim_demon = max((blank_index, *records)) + 1
    if dim_demon < len([r for r in records if r != blank_index]) + 1:
        raise ValidationError(
            f"demon dimension {dim_demon} too small for {len(records)} records")
    if not 0 <= blank_index < dim_demon:
        raise ValidationError(f"blank index {blank_index} outside demon space")
    if any(not 0 <= r < dim_demon for r in records):
        raise ValidationError("record index outside demon space")

    eye_d = np.eye(dim_demon, dtype=complex)
    u = np.zeros((projs.dim * dim_demon,) * 2, dtype=complex)
    for p, rec in zip(projs.projectors, records):
        if rec == blank_index:
            swap = eye_d
        else:
            swap = eye_d.copy()
            swap[rec, rec] = swap[blank_index, blank_index] = 0.0
            swap[rec, blank_index] = swap[blank_index, rec] = 1.0
        u += np.kron(p, swap)
    return MeasurementUnitary(
        matrix=u, dim_system=projs.dim, dim_demon=dim_demon,
        blank_index=blank_index, record_indices=records)


def correlated_state(weights: Sequence[float], projs: ProjectorSet,
                     dim_demon: int, record_indices: Sequence[int]) -> DensityMatrix:
    """Post-measurement joint state sum_i p_i P_i x |rec_i><rec_i|.

    Only meaningful for branch probabilities matching Tr(P_i rho); used by
    tests as the direct construction to compare against the unitary route.
    """
    p = validate_distribution(weights)
    if len(projs) != p.size:
        raise ValidationError("one weight per projector required")
    joint = np.zeros((projs.dim * dim_demon,) * 2, dtype=complex)
    for pi, proj, rec in zip(p, projs.projectors, record_indices):
        rec_mat = np.zeros((dim_demon, dim_demon), dtype=complex)
        rec_mat[rec, rec] = 1.0
        joint += pi * np.kron(proj, rec_mat)
    return DensityMatrix(joint)


def _dephase_demon(rho_joint: DensityMatrix, dim_system: int,
                   dim_demon: int) -> DensityMatrix:
    """Kill demon-basis off-diagonal blocks: the record becomes classical.

    This is the einselection step that turns the unitarily correlated state
    into sum_i P_i rho P_i x |rec_i><rec_i|.
    """
    r = rho_joint.matrix.reshape(dim_system, dim_demon, dim_system, dim_demon)
    mask = np.eye(dim_demon)[None, :, None, :]
    return DensityMatrix((r * mask).reshape(rho_joint.dim, rho_joint.dim))


@dataclass(frozen=True)
class MeasurementAudit:
    """Entropy bookkeeping of one projective measurement.

    ``h_joint_before``/``h_joint_after`` are joint entropies of the
    system-demon pair, the after-state taken once the record has
    decohered into a classical pointer.  For commuting measurements the
    joint entropy is unchanged; otherwise it grows by exactly the Holevo
    quantity ``chi`` of the induced ensemble {Tr(P_i rho), P_i rho P_i/p_i}.
    ``delta_h_demon`` = increase of the demon marginal's entropy and always
    equals ``delta_mutual_information``: the record is worthless noise to
    anyone who cannot read the system it mirrors.
    """

    h_system_before: float
    h_joint_before: float
    h_joint_after: float
    delta_h_demon: float
    delta_mutual_information: float
    commuting: bool
    chi: float
    outcome_probabilities: tuple
    involution_defect: float

    @property
    def joint_entropy_change(self) -> float:
        return self.h_joint_after - self.h_joint_before


def measurement_entropy_audit(rho_system: DensityMatrix, projs: ProjectorSet,
                              dim_demon: int) -> MeasurementAudit:
    """Run one measurement through the unitary + decoherence pipeline.

    The demon starts in the pure blank state 0; outcome i is written into
    basis state i+1.  Requires dim_demon >= len(projs) + 1.
    """
    if projs.dim != rho_system.dim:
        raise ValidationError("projector dimension does not match the state")
    if dim_demon < len(projs) + 1:
        raise ValidationError(
            f"demon dimension {dim_demon} cannot hold {len(projs)} records")
    blank = 0
    records = tuple(range(1, len(projs) + 1))
    u = build_measurement_unitary(projs, blank, records, dim_demon)

    demon0 = DensityMatrix.basis_state(dim_demon, blank)
    joint_before = rho_system.tensor(demon0)
    joint_unitary = u.apply(joint_before)
    joint_after = _dephase_demon(joint_unitary, rho_system.dim, dim_demon)

    h_joint_before = von_neumann_entropy(joint_before)
    h_joint_after = von_neumann_entropy(joint_after)

    demon_after = partial_trace(joint_after, rho_system.dim, dim_demon, "demon")
    delta_h_demon = von_neumann_entropy(demon_after)  # demon started pure
    i_before = mutual_information(joint_before, rho_system.dim, dim_demon)
    i_after = mutual_information(joint_after, rho_system.dim, dim_demon)

    p = projs.outcome_probabilities(rho_system)
    live = p > 1e-15
    components = [
        DensityMatrix(P @ rho_system.matrix @ P / pi)
        for P, pi in zip(projs.projectors, p) if pi > 1e-15
    ]
    chi = holevo_chi(p[live] / p[live].sum(), components)

    return MeasurementAudit(
        h_system_before=von_neumann_entropy(rho_system),
        h_joint_before=h_joint_before,
        h_joint_after=h_joint_after,
        delta_h_demon=delta_h_demon,
        delta_mutual_information=i_after - i_before,
        commuting=projs.commutes_with(rho_system),
        chi=chi,
        outcome_probabilities=tuple(float(x) for x in p),
        involution_defect=u.involution_defect(),
    )
