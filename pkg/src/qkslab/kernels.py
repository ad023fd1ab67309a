"""Fidelity quantum kernels, the classical RBF baseline, and Gram assembly.

The quantum kernel is the all-zeros probability of the compute-uncompute
circuit U(y)^dagger U(x); exact mode shortcuts to the statevector overlap
|<psi(y)|psi(x)>|^2, shots mode simulates the composed circuit and samples.
Shots-mode entry seeds derive from mix64(master_seed, min(i,j), max(i,j)),
so Gram assembly is independent of evaluation order and parallelism.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circuits import adjoint, compose
from .feature_maps import FeatureMapSpec, build_feature_map, preset_of
from .seeding import mix64
from .simulator import sample_zero_count, simulate

SHOT_CAP = 1024
_PSD_TOL = 1e-8


@dataclass(frozen=True)
class KernelConfig:
    kind: str  # "quantum" | "rbf"
    mode: str = "exact"  # "exact" | "shots"
    feature_map: FeatureMapSpec | None = None
    gamma: float | None = None  # rbf only; None means "resolve from the train split"
    shots: int | None = None
    master_seed: int = 0
    name: str = ""
    allow_overshoot: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("quantum", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.mode not in ("exact", "shots"):
            raise ValueError(f"unknown kernel mode {self.mode!r}")
        if self.kind == "quantum":
            if self.feature_map is None:
                raise ValueError("quantum kernel requires a feature map")
            if self.gamma is not None:
                raise ValueError("gamma applies to the rbf kernel only")
        else:
            if self.feature_map is not None:
                raise ValueError("rbf kernel takes no feature map")
            if self.mode != "exact":
                raise ValueError("rbf kernel supports exact mode only")
            if self.gamma is not None and self.gamma <= 0:
                raise ValueError("gamma must be positive")
        if self.mode == "shots":
            if self.shots is None or self.shots < 1:
                raise ValueError("shots mode requires shots >= 1")
            if self.shots > SHOT_CAP and not self.allow_overshoot:
                raise ValueError(f"shots={self.shots} exceeds the {SHOT_CAP}-shot cap")
        elif self.shots is not None:
            raise ValueError("shots only apply in shots mode")
        if not self.name:
            default = "rbf" if self.kind == "rbf" else (preset_of(self.feature_map.pauli_layers) or "quantum")
            object.__setattr__(self, "name", default)


def quantum_config(preset: str, num_features: int, repetitions: int = 2, mode: str = "exact",
                   shots: int | None = None, master_seed: int = 0,
                   allow_overshoot: bool = False) -> KernelConfig:
    spec = FeatureMapSpec.from_preset(preset, num_features, repetitions)
    return KernelConfig("quantum", mode, spec, None, shots, master_seed, preset, allow_overshoot)


def rbf_config(gamma: float | None = None, master_seed: int = 0) -> KernelConfig:
    return KernelConfig("rbf", "exact", None, gamma, None, master_seed, "rbf")


def kernel_fingerprint(config: KernelConfig) -> str:
    """Stable human-readable identity string for model/file provenance."""
    if config.kind == "rbf":
        core = f"rbf:gamma={config.gamma!r}"
    else:
        fm = config.feature_map
        core = f"quantum:{','.join(fm.pauli_layers)}:F={fm.num_features}:R={fm.repetitions}"
    return f"{core}:{config.mode}:shots={config.shots}:seed={config.master_seed}"


def rbf_gamma_scale(train_x: np.ndarray) -> float:
    """Default gamma 1/(F * pooled feature variance); 1.0 for degenerate data."""
    train_x = np.asarray(train_x, dtype=np.float64)
    var = float(train_x.var())
    if var <= 0.0:
        return 1.0
    return 1.0 / (train_x.shape[1] * var)


def resolve_gamma(config: KernelConfig, train_x: np.ndarray) -> KernelConfig:
    """Fill an unset rbf gamma from the training split; no-op otherwise."""
    if config.kind == "rbf" and config.gamma is None:
        return replace(config, gamma=rbf_gamma_scale(train_x))
    return config


def quantum_kernel_entry(spec: FeatureMapSpec, x: np.ndarray, y: np.ndarray, mode: str = "exact",
                         shots: int | None = None, entry_seed: int = 0) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != (spec.num_features,) or y.shape != (spec.num_features,):
        raise ValueError("feature vectors must match the map's feature count")
    if mode == "exact":
        sx = simulate(build_feature_map(spec, x)).amplitudes
        sy = simulate(build_feature_map(spec, y)).amplitudes
        overlap = np.vdot(sy, sx)
        return float(overlap.real**2 + overlap.imag**2)
    if shots is None or shots < 1:
        raise ValueError("shots mode requires shots >= 1")
    circuit = compose(build_feature_map(spec, x), adjoint(build_feature_map(spec, y)))
    result = sample_zero_count(simulate(circuit), shots, entry_seed)
    return result.zero_count / result.shots


def rbf_kernel_entry(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("feature vectors must have equal dimension")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d = x - y
    return float(np.exp(-gamma * np.dot(d, d)))


@dataclass(frozen=True, eq=False)
class GramMatrix:
    values: np.ndarray
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    config: KernelConfig
    symmetric: bool

    def __post_init__(self) -> None:
        n, m = self.values.shape
        if len(self.row_ids) != n or len(self.col_ids) != m:
            raise ValueError("id lists must match the value matrix shape")
        if self.symmetric:
            if self.row_ids != self.col_ids:
                raise ValueError("symmetric GramMatrix requires row_ids == col_ids")
            if not np.array_equal(self.values, self.values.T):
                raise ValueError("symmetric GramMatrix must be exactly symmetric")


def _mirror_upper(values: np.ndarray) -> np.ndarray:
    # One computation per unordered pair: the upper triangle is authoritative.
    upper = np.triu(values)
    return upper + np.triu(values, 1).T


def _statevector_stack(spec: FeatureMapSpec, samples: np.ndarray) -> np.ndarray:
    return np.stack([simulate(build_feature_map(spec, row)).amplitudes for row in samples])


def _exact_quantum_values(spec: FeatureMapSpec, rows: np.ndarray, cols: np.ndarray | None) -> np.ndarray:
    v_rows = _statevector_stack(spec, rows)
    v_cols = v_rows if cols is None else _statevector_stack(spec, cols)
    overlaps = v_rows @ v_cols.conj().T
    values = overlaps.real**2 + overlaps.imag**2
    if cols is None:
        np.fill_diagonal(values, 1.0)  # self-fidelity is 1 by definition
        return _mirror_upper(values)
    return values


def _shots_quantum_values(config: KernelConfig, rows: np.ndarray, cols: np.ndarray | None) -> np.ndarray:
    spec = config.feature_map
    row_circuits = [build_feature_map(spec, x) for x in rows]
    col_circuits = row_circuits if cols is None else [build_feature_map(spec, y) for y in cols]
    col_adjoints = [adjoint(c) for c in col_circuits]
    n, m = len(row_circuits), len(col_adjoints)
    values = np.zeros((n, m))
    for i in range(n):
        j_start = i if cols is None else 0
        for j in range(j_start, m):
            seed = mix64(config.master_seed, min(i, j), max(i, j))
            state = simulate(compose(row_circuits[i], col_adjoints[j]))
            values[i, j] = sample_zero_count(state, config.shots, seed).zero_count / config.shots
            if cols is None:
                values[j, i] = values[i, j]
    return values


def _rbf_values(gamma: float, rows: np.ndarray, cols: np.ndarray | None) -> np.ndarray:
    right = rows if cols is None else cols
    d2 = ((rows[:, None, :] - right[None, :, :]) ** 2).sum(axis=2)
    values = np.exp(-gamma * d2)
    return _mirror_upper(values) if cols is None else values


def gram_matrix(rows: np.ndarray, cols: np.ndarray | None, config: KernelConfig,
                row_ids: tuple[str, ...] | None = None, col_ids: tuple[str, ...] | None = None,
                clip: bool | None = None) -> GramMatrix:
    """Assemble the kernel matrix rows x cols (cols=None means symmetric).

    ``clip`` controls eigenvalue clipping of symmetric results; the default
    applies it in shots mode only, where sampling noise can break positive
    semidefiniteness.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    symmetric = cols is None
    cols_arr = None if symmetric else np.atleast_2d(np.asarray(cols, dtype=np.float64))
    if not symmetric and cols_arr.shape[1] != rows.shape[1]:
        raise ValueError("row and column samples must share the feature dimension")
    if config.kind == "quantum":
        if rows.shape[1] != config.feature_map.num_features:
            raise ValueError("sample dimension does not match the feature map")
        if config.mode == "exact":
            values = _exact_quantum_values(config.feature_map, rows, cols_arr)
        else:
            values = _shots_quantum_values(config, rows, cols_arr)
    else:
        if config.gamma is None:
            raise ValueError("rbf gamma is unresolved; call resolve_gamma on the train split first")
        values = _rbf_values(config.gamma, rows, cols_arr)
    if values.min() < -1e-9 or values.max() > 1.0 + 1e-9:
        raise AssertionError("kernel values escaped [0, 1]")
    row_ids = tuple(row_ids) if row_ids is not None else tuple(str(i) for i in range(rows.shape[0]))
    if symmetric:
        col_ids = row_ids
    else:
        col_ids = tuple(col_ids) if col_ids is not None else tuple(str(j) for j in range(cols_arr.shape[0]))
    gram = GramMatrix(values, row_ids, col_ids, config, symmetric)
    if clip is None:
        clip = symmetric and config.mode == "shots"
    return psd_clip(gram) if clip else gram


def gram_pair(train_x: np.ndarray, test_x: np.ndarray, config: KernelConfig,
              train_ids: tuple[str, ...] | None = None, test_ids: tuple[str, ...] | None = None,
              clip: bool | None = None) -> tuple[GramMatrix, GramMatrix]:
    """Train gram plus test-by-train cross gram, sharing exact-mode statevectors."""
    train_x = np.atleast_2d(np.asarray(train_x, dtype=np.float64))
    test_x = np.atleast_2d(np.asarray(test_x, dtype=np.float64))
    train_ids = tuple(train_ids) if train_ids is not None else tuple(f"t{i}" for i in range(train_x.shape[0]))
    test_ids = tuple(test_ids) if test_ids is not None else tuple(f"s{i}" for i in range(test_x.shape[0]))
    if config.kind == "quantum" and config.mode == "exact":
        v_train = _statevector_stack(config.feature_map, train_x)
        v_test = _statevector_stack(config.feature_map, test_x)
        g = v_train @ v_train.conj().T
        train_values = g.real**2 + g.imag**2
        np.fill_diagonal(train_values, 1.0)  # self-fidelity is 1 by definition
        train_values = _mirror_upper(train_values)
        c = v_test @ v_train.conj().T
        cross_values = c.real**2 + c.imag**2
        train_gram = GramMatrix(train_values, train_ids, train_ids, config, True)
        cross_gram = GramMatrix(cross_values, test_ids, train_ids, config, False)
        return train_gram, cross_gram
    train_gram = gram_matrix(train_x, None, config, row_ids=train_ids, clip=clip)
    cross_gram = gram_matrix(test_x, train_x, config, row_ids=test_ids, col_ids=train_ids)
    return train_gram, cross_gram


def psd_clip(gram: GramMatrix) -> GramMatrix:
    """Project a symmetric gram onto the PSD cone by zeroing negative eigenvalues.

    Matrices already PSD within 1e-8 pass through unchanged.
    """
    if not gram.symmetric:
        raise ValueError("psd_clip requires a symmetric GramMatrix")
    eigvals, eigvecs = np.linalg.eigh(gram.values)
    if eigvals.min() >= -_PSD_TOL:
        return gram
    clipped = np.clip(eigvals, 0.0, None)
    values = _mirror_upper((eigvecs * clipped) @ eigvecs.T)
    return GramMatrix(values, gram.row_ids, gram.col_ids, gram.config, True)


# --- gram file format -------------------------------------------------------

GRAM_FORMAT = "qkslab-gram"
GRAM_VERSION = "1.0"


def write_gram(gram: GramMatrix, path) -> None:
    """Write the line-oriented gram file; values carry 17 significant digits."""
    cfg = gram.config
    lines = [f"{GRAM_FORMAT} {GRAM_VERSION}", f"kind {cfg.kind}"]
    if cfg.kind == "quantum":
        fm = cfg.feature_map
        lines.append(f"pauli_layers {','.join(fm.pauli_layers)}")
        lines.append(f"features {fm.num_features}")
        lines.append(f"repetitions {fm.repetitions}")
        lines.append(f"entanglement {fm.entanglement}")
    else:
        lines.append(f"gamma {cfg.gamma:.17g}")
    lines.append(f"mode {cfg.mode}")
    if cfg.shots is not None:
        lines.append(f"shots {cfg.shots}")
    lines.append(f"master_seed {cfg.master_seed}")
    lines.append(f"symmetric {int(gram.symmetric)}")
    lines.append(f"rows {len(gram.row_ids)}")
    lines.append(f"cols {len(gram.col_ids)}")
    lines.append("row_ids " + " ".join(gram.row_ids))
    lines.append("col_ids " + " ".join(gram.col_ids))
    lines.append("values")
    for row in gram.values:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_gram(path) -> GramMatrix:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty gram file")
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != GRAM_FORMAT:
        raise ValueError(f"{path}: not a {GRAM_FORMAT} file")
    if magic[1].split(".")[0] != GRAM_VERSION.split(".")[0]:
        raise ValueError(f"{path}: unsupported format version {magic[1]}")
    fields: dict[str, str] = {}
    idx = 1
    while idx < len(lines) and lines[idx] != "values":
        key, _, value = lines[idx].partition(" ")
        fields[key] = value
        idx += 1
    if idx == len(lines):
        raise ValueError(f"{path}: missing values section")
    n, m = int(fields["rows"]), int(fields["cols"])
    values = np.array(
        [[float(tok) for tok in lines[idx + 1 + i].split()] for i in range(n)],
        dtype=np.float64,
    )
    if values.shape != (n, m):
        raise ValueError(f"{path}: value block shape {values.shape} != ({n}, {m})")
    shots = int(fields["shots"]) if "shots" in fields else None
    if fields["kind"] == "quantum":
        spec = FeatureMapSpec(
            tuple(fields["pauli_layers"].split(",")),
            int(fields["features"]),
            int(fields["repetitions"]),
            fields.get("entanglement", "linear"),
        )
        config = KernelConfig("quantum", fields["mode"], spec, None, shots,
                              int(fields["master_seed"]),
                              allow_overshoot=shots is not None and shots > SHOT_CAP)
    else:
        config = KernelConfig("rbf", fields["mode"], None, float(fields["gamma"]), shots,
                              int(fields["master_seed"]))
    row_ids = tuple(fields["row_ids"].split()) if fields["row_ids"] else ()
    col_ids = tuple(fields["col_ids"].split()) if fields["col_ids"] else ()
    return GramMatrix(values, row_ids, col_ids, config, bool(int(fields["symmetric"])))
