"""Line-oriented text formats with strict validation and byte-stable output.

All formats share one set of rules: UTF-8 with LF line endings, ``#``-prefixed
comment lines and blank lines are skipped, fields are whitespace-separated on
input and single-space separated on output, reals are written in shortest
round-trip decimal, and records are emitted sorted by primary id with a
trailing newline. Unknown trailing fields are a parse error. Every parse
error names the first offending (1-based) line.

Grammars
--------
contours    ``<utterance_id> <v1> ... <vN>``          (Hz, 0.0 = unvoiced)
stats       ``<id> <mean> <std> <voiced_count>``      (natural-log Hz)
embeddings  ``<speaker_id> <utterance_id> <M|F> <d reals>``
pool        ``<speaker_id> <M|F> <d reals> | <f0_mean> <f0_std> <voiced_count>``
plda        ``dim d`` / ``mean ...`` / d x ``transform ...`` / ``psi ...``
scores      ``<enroll_speaker_id> <test_utterance_id> <score>``
trials      ``<enroll_speaker_id> <test_utterance_id> <target|nontarget>``
mapping     ``<source_speaker_id> <seed_used> <member_1> ... <member_k>``
det         ``<p_fa> <p_miss>``                       (row order preserved)
report      fixed ``key value`` lines (eer_pct, cllr_bits, min_cllr_bits, ...)
keyvalues   generic ``key value`` lines (configs, run manifests)
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidValueError,
    LineSyntaxError,
    PseudovoxError,
)
from .f0 import F0Contour, LogF0Stats
from .metrics import EvalReport
from .plda import Gender, PldaModel, SpeakerEmbedding
from .selection import PoolSpeaker

__all__ = [
    "parse_contours",
    "serialize_contours",
    "parse_stats",
    "serialize_stats",
    "parse_embeddings",
    "serialize_embeddings",
    "parse_pool",
    "serialize_pool",
    "parse_plda",
    "serialize_plda",
    "parse_scores",
    "serialize_scores",
    "parse_trials",
    "serialize_trials",
    "parse_mapping",
    "serialize_mapping",
    "parse_det",
    "serialize_det",
    "parse_report",
    "serialize_report",
    "parse_keyvalues",
    "serialize_keyvalues",
    "format_float",
    "sha256_hex",
    "decode_text",
]

_FLOAT_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
_UINT_RE = re.compile(r"\d+\Z")


def decode_text(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise LineSyntaxError(f"input is not valid UTF-8: {exc}") from None


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def format_float(value: float) -> str:
    """Shortest decimal that round-trips to the exact float64 value."""
    return repr(float(value))


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped.split()


def _parse_float(token: str, line: int) -> float:
    if not _FLOAT_RE.match(token):
        raise LineSyntaxError(f"expected a decimal real, got {token!r}", line)
    value = float(token)
    if not np.isfinite(value):
        raise InvalidValueError(f"non-finite value {token!r}", line)
    return value


def _parse_uint(token: str, line: int, bits: int = 64) -> int:
    if not _UINT_RE.match(token):
        raise LineSyntaxError(f"expected an unsigned integer, got {token!r}", line)
    value = int(token)
    if value >= (1 << bits):
        raise InvalidValueError(f"integer {token} does not fit in {bits} bits", line)
    return value


def _parse_id(token: str, line: int) -> str:
    # ids starting with '#' are unrepresentable at line starts (comment rule)
    if token.startswith("#"):
        raise InvalidValueError(f"id {token!r} may not start with '#'", line)
    return token


def _check_out_id(identifier: str) -> str:
    if not identifier or any(c.isspace() for c in identifier) or identifier.startswith("#"):
        raise InvalidValueError(f"id {identifier!r} is not serializable")
    return identifier


def _with_line(exc: PseudovoxError, line: int) -> PseudovoxError:
    return type(exc)(str(exc), line) if isinstance(exc, (LineSyntaxError, InvalidValueError, DimensionMismatchError)) else InvalidValueError(str(exc), line)


# --- contours ---------------------------------------------------------------


def parse_contours(text: str) -> list[F0Contour]:
    records = []
    seen: set[str] = set()
    for lineno, tokens in _data_lines(text):
        utt_id = _parse_id(tokens[0], lineno)
        if utt_id in seen:
            raise InvalidValueError(f"duplicate utterance id {utt_id!r}", lineno)
        seen.add(utt_id)
        values = [_parse_float(t, lineno) for t in tokens[1:]]
        try:
            records.append(F0Contour(utt_id, values))
        except PseudovoxError as exc:
            raise InvalidValueError(str(exc), lineno) from None
    return records


def serialize_contours(records: list[F0Contour]) -> str:
    _require_unique(r.utterance_id for r in records)
    lines = []
    for rec in sorted(records, key=lambda r: r.utterance_id):
        fields = [_check_out_id(rec.utterance_id)] + [format_float(v) for v in rec.values]
        lines.append(" ".join(fields))
    return _joined(lines)


# --- stats ------------------------------------------------------------------


def parse_stats(text: str) -> list[tuple[str, LogF0Stats]]:
    records = []
    seen: set[str] = set()
    for lineno, tokens in _data_lines(text):
        if len(tokens) != 4:
            raise LineSyntaxError(
                f"stats line needs 4 fields, got {len(tokens)}", lineno
            )
        rec_id = _parse_id(tokens[0], lineno)
        if rec_id in seen:
            raise InvalidValueError(f"duplicate stats id {rec_id!r}", lineno)
        seen.add(rec_id)
        mean = _parse_float(tokens[1], lineno)
        std = _parse_float(tokens[2], lineno)
        count = _parse_uint(tokens[3], lineno)
        if count < 1:
            raise InvalidValueError("voiced_count must be >= 1", lineno)
        try:
            records.append((rec_id, LogF0Stats(mean, std, count)))
        except PseudovoxError as exc:
            raise InvalidValueError(str(exc), lineno) from None
    return records


def serialize_stats(records: list[tuple[str, LogF0Stats]]) -> str:
    _require_unique(r[0] for r in records)
    lines = []
    for rec_id, stats in sorted(records, key=lambda r: r[0]):
        lines.append(
            " ".join(
                [
                    _check_out_id(rec_id),
                    format_float(stats.mean),
                    format_float(stats.std),
                    str(stats.voiced_frame_count),
                ]
            )
        )
    return _joined(lines)


# --- embeddings -------------------------------------------------------------


def parse_embeddings(text: str) -> list[SpeakerEmbedding]:
    records = []
    seen: set[tuple[str, str]] = set()
    gender_of: dict[str, Gender] = {}
    dim: int | None = None
    for lineno, tokens in _data_lines(text):
        if len(tokens) < 4:
            raise LineSyntaxError("embedding line needs id, utt, gender, values", lineno)
        speaker_id = _parse_id(tokens[0], lineno)
        utt_id = _parse_id(tokens[1], lineno)
        gender_token = tokens[2]
        if (speaker_id, utt_id) in seen:
            raise InvalidValueError(
                f"duplicate embedding for ({speaker_id!r}, {utt_id!r})", lineno
            )
        seen.add((speaker_id, utt_id))
        try:
            gender = Gender.parse(gender_token)
        except PseudovoxError as exc:
            raise _with_line(exc, lineno) from None
        if gender_of.setdefault(speaker_id, gender) is not gender:
            raise InvalidValueError(
                f"conflicting gender for speaker {speaker_id!r}", lineno
            )
        values = [_parse_float(t, lineno) for t in tokens[3:]]
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DimensionMismatchError(
                f"expected {dim} embedding values, got {len(values)}", lineno
            )
        try:
            records.append(SpeakerEmbedding(speaker_id, gender, values, utt_id))
        except PseudovoxError as exc:
            raise _with_line(exc, lineno) from None
    return records


def serialize_embeddings(records: list[SpeakerEmbedding]) -> str:
    keys = []
    for rec in records:
        if rec.utterance_id is None:
            raise InvalidValueError(
                f"embedding for {rec.speaker_id!r} needs an utterance_id to serialize"
            )
        keys.append((rec.speaker_id, rec.utterance_id))
    _require_unique(keys)
    lines = []
    for rec in sorted(records, key=lambda r: (r.speaker_id, r.utterance_id)):
        fields = [
            _check_out_id(rec.speaker_id),
            _check_out_id(rec.utterance_id),
            rec.gender.value,
        ] + [format_float(v) for v in rec.vector]
        lines.append(" ".join(fields))
    return _joined(lines)


# --- pool manifest ----------------------------------------------------------


def parse_pool(text: str) -> list[PoolSpeaker]:
    records = []
    seen: set[str] = set()
    dim: int | None = None
    for lineno, tokens in _data_lines(text):
        if len(tokens) < 7:
            raise LineSyntaxError(
                "pool line needs id, gender, embedding, '|', three stats", lineno
            )
        if tokens[-4] != "|":
            raise LineSyntaxError("pool line needs a '|' before the F0 stats", lineno)
        speaker_id = _parse_id(tokens[0], lineno)
        if speaker_id in seen:
            raise InvalidValueError(f"duplicate pool speaker {speaker_id!r}", lineno)
        seen.add(speaker_id)
        try:
            gender = Gender.parse(tokens[1])
        except PseudovoxError as exc:
            raise _with_line(exc, lineno) from None
        emb_tokens = tokens[2:-4]
        values = [_parse_float(t, lineno) for t in emb_tokens]
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise DimensionMismatchError(
                f"expected {dim} embedding values, got {len(values)}", lineno
            )
        mean = _parse_float(tokens[-3], lineno)
        std = _parse_float(tokens[-2], lineno)
        count = _parse_uint(tokens[-1], lineno)
        if count < 1:
            raise InvalidValueError("voiced_count must be >= 1", lineno)
        try:
            records.append(
                PoolSpeaker(speaker_id, gender, values, LogF0Stats(mean, std, count))
            )
        except PseudovoxError as exc:
            raise _with_line(exc, lineno) from None
    return records


def serialize_pool(records: list[PoolSpeaker]) -> str:
    _require_unique(r.speaker_id for r in records)
    lines = []
    for rec in sorted(records, key=lambda r: r.speaker_id):
        fields = (
            [_check_out_id(rec.speaker_id), rec.gender.value]
            + [format_float(v) for v in rec.mean_embedding]
            + [
                "|",
                format_float(rec.f0_stats.mean),
                format_float(rec.f0_stats.std),
                str(rec.f0_stats.voiced_frame_count),
            ]
        )
        lines.append(" ".join(fields))
    return _joined(lines)


# --- PLDA model -------------------------------------------------------------


def parse_plda(text: str) -> PldaModel:
    rows = list(_data_lines(text))
    if not rows:
        raise LineSyntaxError("PLDA file is empty", 1)
    lineno, tokens = rows[0]
    if len(tokens) != 2 or tokens[0] != "dim":
        raise LineSyntaxError("first PLDA line must be 'dim <d>'", lineno)
    dim = _parse_uint(tokens[1], lineno)
    if dim < 1:
        raise InvalidValueError("PLDA dimension must be >= 1", lineno)
    if len(rows) != dim + 3:
        last = rows[-1][0]
        raise LineSyntaxError(
            f"PLDA file needs {dim + 3} data lines for dim {dim}, got {len(rows)}", last
        )

    def vector_line(index: int, label: str) -> np.ndarray:
        lineno, tokens = rows[index]
        if len(tokens) != dim + 1 or tokens[0] != label:
            raise LineSyntaxError(
                f"expected '{label}' followed by {dim} reals", lineno
            )
        return np.array([_parse_float(t, lineno) for t in tokens[1:]])

    mean = vector_line(1, "mean")
    transform = np.stack([vector_line(2 + i, "transform") for i in range(dim)])
    psi = vector_line(dim + 2, "psi")
    if np.any(psi < 0.0):
        raise InvalidValueError("psi components must be >= 0", rows[dim + 2][0])
    try:
        return PldaModel(mean, transform, psi)
    except PseudovoxError as exc:
        raise _with_line(exc, rows[0][0]) from None


def serialize_plda(model: PldaModel) -> str:
    lines = [f"dim {model.dim}"]
    lines.append(" ".join(["mean"] + [format_float(v) for v in model.mean]))
    for row in model.transform:
        lines.append(" ".join(["transform"] + [format_float(v) for v in row]))
    lines.append(" ".join(["psi"] + [format_float(v) for v in model.psi]))
    return _joined(lines)


# --- scores and trial keys --------------------------------------------------


def parse_scores(text: str) -> list[tuple[str, str, float]]:
    records = []
    seen: set[tuple[str, str]] = set()
    for lineno, tokens in _data_lines(text):
        if len(tokens) != 3:
            raise LineSyntaxError("score line needs enroll, test, score", lineno)
        key = (_parse_id(tokens[0], lineno), _parse_id(tokens[1], lineno))
        if key in seen:
            raise InvalidValueError(f"duplicate trial {key!r}", lineno)
        seen.add(key)
        records.append((key[0], key[1], _parse_float(tokens[2], lineno)))
    return records


def serialize_scores(records: list[tuple[str, str, float]]) -> str:
    _require_unique((r[0], r[1]) for r in records)
    lines = [
        " ".join([_check_out_id(e), _check_out_id(t), format_float(s)])
        for e, t, s in sorted(records, key=lambda r: (r[0], r[1]))
    ]
    return _joined(lines)


def parse_trials(text: str) -> list[tuple[str, str, bool]]:
    records = []
    seen: set[tuple[str, str]] = set()
    for lineno, tokens in _data_lines(text):
        if len(tokens) != 3:
            raise LineSyntaxError("trial line needs enroll, test, label", lineno)
        if tokens[2] not in ("target", "nontarget"):
            raise InvalidValueError(
                f"label must be 'target' or 'nontarget', got {tokens[2]!r}", lineno
            )
        key = (_parse_id(tokens[0], lineno), _parse_id(tokens[1], lineno))
        if key in seen:
            raise InvalidValueError(f"duplicate trial {key!r}", lineno)
        seen.add(key)
        records.append((key[0], key[1], tokens[2] == "target"))
    return records


def serialize_trials(records: list[tuple[str, str, bool]]) -> str:
    _require_unique((r[0], r[1]) for r in records)
    lines = [
        " ".join(
            [_check_out_id(e), _check_out_id(t), "target" if is_tar else "nontarget"]
        )
        for e, t, is_tar in sorted(records, key=lambda r: (r[0], r[1]))
    ]
    return _joined(lines)


# --- pseudo-speaker mapping -------------------------------------------------


def parse_mapping(text: str) -> list[tuple[str, int, tuple[str, ...]]]:
    records = []
    seen: set[str] = set()
    for lineno, tokens in _data_lines(text):
        if len(tokens) < 3:
            raise LineSyntaxError("mapping line needs source, seed, members", lineno)
        source = _parse_id(tokens[0], lineno)
        if source in seen:
            raise InvalidValueError(f"duplicate mapping for {source!r}", lineno)
        seen.add(source)
        seed = _parse_uint(tokens[1], lineno)
        members = tuple(_parse_id(t, lineno) for t in tokens[2:])
        if len(set(members)) != len(members):
            raise InvalidValueError("mapping members must be unique", lineno)
        records.append((source, seed, members))
    return records


def serialize_mapping(records: list[tuple[str, int, tuple[str, ...]]]) -> str:
    _require_unique(r[0] for r in records)
    lines = []
    for source, seed, members in sorted(records, key=lambda r: r[0]):
        lines.append(
            " ".join([_check_out_id(source), str(seed)] + [_check_out_id(m) for m in members])
        )
    return _joined(lines)


# --- DET export -------------------------------------------------------------


def parse_det(text: str) -> list[tuple[float, float]]:
    points = []
    for lineno, tokens in _data_lines(text):
        if len(tokens) != 2:
            raise LineSyntaxError("DET line needs two columns: p_fa p_miss", lineno)
        p_fa = _parse_float(tokens[0], lineno)
        p_miss = _parse_float(tokens[1], lineno)
        if not (0.0 <= p_fa <= 1.0 and 0.0 <= p_miss <= 1.0):
            raise InvalidValueError("DET rates must lie in [0, 1]", lineno)
        points.append((p_fa, p_miss))
    return points


def serialize_det(points: list[tuple[float, float]]) -> str:
    return _joined([f"{format_float(x)} {format_float(y)}" for x, y in points])


# --- evaluation report ------------------------------------------------------

_REPORT_KEYS = (
    "eer_pct",
    "cllr_bits",
    "min_cllr_bits",
    "n_target_trials",
    "n_nontarget_trials",
)


def parse_report(text: str) -> EvalReport:
    values: dict[str, tuple[str, int]] = {}
    for lineno, tokens in _data_lines(text):
        if len(tokens) != 2:
            raise LineSyntaxError("report line needs 'key value'", lineno)
        key, value = tokens
        if key not in _REPORT_KEYS:
            raise InvalidValueError(f"unknown report key {key!r}", lineno)
        if key in values:
            raise InvalidValueError(f"duplicate report key {key!r}", lineno)
        values[key] = (value, lineno)
    missing = [k for k in _REPORT_KEYS if k not in values]
    if missing:
        raise LineSyntaxError(f"report is missing keys: {', '.join(missing)}", 1)
    return EvalReport(
        eer_pct=_parse_float(*values["eer_pct"]),
        cllr_bits=_parse_float(*values["cllr_bits"]),
        min_cllr_bits=_parse_float(*values["min_cllr_bits"]),
        n_target_trials=_parse_uint(*values["n_target_trials"]),
        n_nontarget_trials=_parse_uint(*values["n_nontarget_trials"]),
    )


def serialize_report(report: EvalReport) -> str:
    lines = [
        f"eer_pct {format_float(report.eer_pct)}",
        f"cllr_bits {format_float(report.cllr_bits)}",
        f"min_cllr_bits {format_float(report.min_cllr_bits)}",
        f"n_target_trials {report.n_target_trials}",
        f"n_nontarget_trials {report.n_nontarget_trials}",
    ]
    return _joined(lines)


# --- generic key/value files (configs, run manifests) -----------------------


def parse_keyvalues(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, tokens in _data_lines(text):
        if len(tokens) != 2:
            raise LineSyntaxError("expected 'key value'", lineno)
        key, value = _parse_id(tokens[0], lineno), _parse_id(tokens[1], lineno)
        if key in values:
            raise InvalidValueError(f"duplicate key {key!r}", lineno)
        values[key] = value
    return values


def serialize_keyvalues(values: dict[str, str]) -> str:
    lines = [f"{_check_out_id(k)} {_check_out_id(str(v))}" for k, v in sorted(values.items())]
    return _joined(lines)


# --- shared helpers ---------------------------------------------------------


def _joined(lines: list[str]) -> str:
    return "\n".join(lines) + "\n" if lines else ""


def _require_unique(keys) -> None:
    seen = set()
    for key in keys:
        if key in seen:
            raise InvalidValueError(f"duplicate record key {key!r}")
        seen.add(key)
