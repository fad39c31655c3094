"""Command-line interface: ``stats``, ``anonymize``, ``score``, ``eval``, ``simulate``.

Every subcommand is a thin shell over the library; file outputs are
byte-identical to direct library calls. Global flags (``--seed``,
``--config``, ``--threads``, ``--det-out``) are given before the subcommand::

    pseudovox --seed 7 --threads 4 anonymize --pool pool.txt ...

Configuration files are ``key value`` lines whose keys mirror the flag names;
flags win when both are given. Diagnostics go to stderr; the exit code is 0
iff the run produced every requested output.
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .concurrency import parallel_map
from .errors import (
    InvalidValueError,
    NoVoicedFramesError,
    PoolTooSmallError,
    PseudovoxError,
)
from . import formats
from .f0 import compute_log_f0_stats, transform_contour
from .metrics import TrialScoreSet, det_points, evaluate
from .plda import Gender, SpeakerEmbedding, plda_score, project
from .selection import (
    GenderPolicy,
    Scorer,
    SelectionConfig,
    SpeakerPool,
    derive_pseudo_speaker,
)
from .simulate import (
    AttackerModel,
    AttackModel,
    CohortSpec,
    F0Mode,
    ScenarioConfig,
    generate_cohort,
    run_scenario,
)

FORMAT_VERSION = "1"


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _read(path: str) -> str:
    try:
        return formats.decode_text(Path(path).read_bytes())
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}")


def _write_outputs(outputs: dict[Path, str]) -> None:
    written: list[Path] = []
    try:
        for path, text in outputs.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            written.append(path)
    except BaseException:
        for path in written:  # no partial output sets
            path.unlink(missing_ok=True)
        raise


def _manifest(command: str, entries: dict[str, str]) -> str:
    base = {
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "command": command,
    }
    return formats.serialize_keyvalues({**base, **entries})


def _load_config(path: str | None, allowed: dict[str, type], command: str) -> dict[str, str]:
    if path is None:
        return {}
    values = formats.parse_keyvalues(_read(path))
    for key in values:
        if key not in allowed:
            raise InvalidValueError(f"unknown {command} config key {key!r}")
    return values


def _convert(key: str, raw: str, kind):
    try:
        if kind is bool:
            if raw not in ("true", "false"):
                raise ValueError("expected true or false")
            return raw == "true"
        return kind(raw)
    except (ValueError, PseudovoxError):
        raise InvalidValueError(f"bad value {raw!r} for key {key!r}") from None


class _Cli:
    def __init__(self, seed, config, threads, det_out):
        self.seed = seed
        self.config = config
        self.threads = threads
        self.det_out = det_out


@click.group()
@click.version_option(__version__)
@click.option("--seed", type=int, default=None, help="Global selection/cohort seed override.")
@click.option("--config", type=click.Path(), default=None, help="'key value' config file.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True, help="Worker threads for batch steps.")
@click.option("--det-out", type=click.Path(), default=None, help="Write DET operating points to this file.")
@click.pass_context
def main(ctx, seed, config, threads, det_out):
    """X-vector pseudo-speaker pipeline and privacy-linkability evaluation."""
    ctx.obj = _Cli(seed, config, threads, det_out)


# --- stats -------------------------------------------------------------------


@main.command()
@click.argument("contours_file", type=click.Path())
@click.argument("out_stats_file", type=click.Path())
def stats(contours_file, out_stats_file):
    """Per-utterance voiced log-F0 statistics."""
    try:
        contours = formats.parse_contours(_read(contours_file))
        records = []
        for contour in contours:
            try:
                records.append((contour.utterance_id, compute_log_f0_stats(contour)))
            except NoVoicedFramesError:
                click.echo(
                    f"warning: {contour.utterance_id} has no voiced frames, skipped",
                    err=True,
                )
        out = Path(out_stats_file)
        _write_outputs(
            {
                out: formats.serialize_stats(records),
                out.with_name(out.name + ".manifest"): _manifest(
                    "stats",
                    {
                        "input_sha256_contours": formats.sha256_hex(_read(contours_file)),
                        "n_utterances": str(len(records)),
                    },
                ),
            }
        )
    except PseudovoxError as exc:
        _fail(str(exc))


# --- anonymize ----------------------------------------------------------------

_ANON_CONFIG_KEYS = {
    "k_far": int,
    "k_sel": int,
    "gender_policy": GenderPolicy,
    "scorer": Scorer,
    "length_norm": bool,
    "global_seed": int,
    "f0_mode": F0Mode,
}


@main.command()
@click.option("--pool", "pool_file", type=click.Path(), required=True)
@click.option("--embeddings", "embeddings_file", type=click.Path(), required=True)
@click.option("--contours", "contours_file", type=click.Path(), required=True)
@click.option("--plda", "plda_file", type=click.Path(), default=None)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--gender", "gender_policy", type=click.Choice(["same", "opposite"]), default=None)
@click.option("--f0", "f0_mode", type=click.Choice(["original", "modified"]), default=None)
@click.option("--k-far", type=int, default=None, help="Furthest candidates kept (default 200).")
@click.option("--k-sel", type=int, default=None, help="Members drawn from them (default 100).")
@click.option("--scorer", type=click.Choice(["plda", "cosine"]), default=None)
@click.option("--length-norm/--no-length-norm", "length_norm", default=None)
@click.pass_obj
def anonymize(obj, pool_file, embeddings_file, contours_file, plda_file, out_dir,
              gender_policy, f0_mode, k_far, k_sel, scorer, length_norm):
    """Derive one pseudo-speaker per source speaker; transform F0 on request."""
    try:
        cfg_values = _load_config(obj.config, _ANON_CONFIG_KEYS, "anonymize")
        resolved = {
            key: _convert(key, raw, _ANON_CONFIG_KEYS[key]) for key, raw in cfg_values.items()
        }
        for key, flag in (
            ("k_far", k_far),
            ("k_sel", k_sel),
            ("gender_policy", GenderPolicy(gender_policy) if gender_policy else None),
            ("scorer", Scorer(scorer) if scorer else None),
            ("length_norm", length_norm),
            ("global_seed", obj.seed),
            ("f0_mode", F0Mode(f0_mode) if f0_mode else None),
        ):
            if flag is not None:
                resolved[key] = flag
        mode = resolved.pop("f0_mode", F0Mode.ORIGINAL)
        sel = SelectionConfig(**resolved)

        pool_text = _read(pool_file)
        embeddings_text = _read(embeddings_file)
        contours_text = _read(contours_file)
        plda_model = None
        if plda_file is not None:
            plda_model = formats.parse_plda(_read(plda_file))
        pool = SpeakerPool(formats.parse_pool(pool_text), plda_model)
        embeddings = formats.parse_embeddings(embeddings_text)
        contours = formats.parse_contours(contours_text)

        contour_by_utt = {c.utterance_id: c for c in contours}
        utt_ids = {e.utterance_id for e in embeddings}
        if utt_ids != set(contour_by_utt):
            odd = sorted(utt_ids.symmetric_difference(contour_by_utt))[0]
            _fail(f"embeddings and contours disagree on utterance {odd!r}")

        by_speaker: dict[str, list[SpeakerEmbedding]] = {}
        for emb in embeddings:
            by_speaker.setdefault(emb.speaker_id, []).append(emb)
        speakers = sorted(by_speaker)

        def derive(speaker_id: str):
            embs = by_speaker[speaker_id]
            source = SpeakerEmbedding(
                speaker_id,
                embs[0].gender,
                np.mean([e.vector for e in embs], axis=0),
            )
            try:
                pseudo = derive_pseudo_speaker(pool, source, sel)
            except PoolTooSmallError as exc:
                raise PoolTooSmallError(f"speaker {speaker_id!r}: {exc}") from None
            out_contours = []
            for emb in embs:
                contour = contour_by_utt[emb.utterance_id]
                if mode is F0Mode.MODIFIED:
                    if not contour.voiced_mask.any():
                        click.echo(
                            f"warning: {contour.utterance_id} has no voiced frames, copied unchanged",
                            err=True,
                        )
                    else:
                        contour = transform_contour(
                            contour, compute_log_f0_stats(contour), pseudo.f0_stats
                        )
                out_contours.append(contour)
            return pseudo, source.gender, out_contours

        results = parallel_map(derive, speakers, obj.threads)

        mapping_rows = []
        xvector_rows = []
        stats_rows = []
        contour_rows = []
        for speaker_id, (pseudo, gender, out_contours) in zip(speakers, results):
            mapping_rows.append((speaker_id, pseudo.seed_used, tuple(pseudo.member_ids)))
            xvector_rows.append(
                SpeakerEmbedding(speaker_id, gender, pseudo.xvector, "pseudo")
            )
            stats_rows.append((speaker_id, pseudo.f0_stats))
            contour_rows.extend(out_contours)

        out = Path(out_dir)
        data_outputs = {
            "mapping.txt": formats.serialize_mapping(mapping_rows),
            "pseudo_xvectors.txt": formats.serialize_embeddings(xvector_rows),
            "pseudo_f0_stats.txt": formats.serialize_stats(stats_rows),
            "contours_anon.txt": formats.serialize_contours(contour_rows),
        }
        manifest_entries = {
            "global_seed": str(sel.global_seed),
            "k_far": str(sel.k_far),
            "k_sel": str(sel.k_sel),
            "gender_policy": sel.gender_policy.value,
            "scorer": sel.scorer.value,
            "length_norm": "true" if sel.length_norm else "false",
            "f0_mode": mode.value,
            "n_source_speakers": str(len(speakers)),
            "input_sha256_pool": formats.sha256_hex(pool_text),
            "input_sha256_embeddings": formats.sha256_hex(embeddings_text),
            "input_sha256_contours": formats.sha256_hex(contours_text),
        }
        if plda_file is not None:
            manifest_entries["input_sha256_plda"] = formats.sha256_hex(_read(plda_file))
        for name, text in data_outputs.items():
            manifest_entries[f"output_sha256_{name.removesuffix('.txt')}"] = formats.sha256_hex(text)
        _write_outputs(
            {
                **{out / name: text for name, text in data_outputs.items()},
                out / "manifest.txt": _manifest("anonymize", manifest_entries),
            }
        )
    except PseudovoxError as exc:
        _fail(str(exc))


# --- score --------------------------------------------------------------------


@main.command()
@click.argument("plda_file", type=click.Path())
@click.argument("enroll_file", type=click.Path())
@click.argument("trial_embeddings", type=click.Path())
@click.argument("trial_key", type=click.Path())
@click.argument("out_scores", type=click.Path())
@click.option("--length-norm/--no-length-norm", "length_norm", default=True, show_default=True)
def score(plda_file, enroll_file, trial_embeddings, trial_key, out_scores, length_norm):
    """PLDA-score every trial in the key against enrollment speakers."""
    try:
        model = formats.parse_plda(_read(plda_file))
        enroll = formats.parse_embeddings(_read(enroll_file))
        trials_emb = formats.parse_embeddings(_read(trial_embeddings))
        key_rows = formats.parse_trials(_read(trial_key))

        enroll_latents: dict[str, list[np.ndarray]] = {}
        for emb in enroll:
            enroll_latents.setdefault(emb.speaker_id, []).append(
                project(model, emb, length_norm=length_norm)
            )
        enroll_mean = {
            sid: np.mean(latents, axis=0) for sid, latents in enroll_latents.items()
        }
        trial_latents = {
            emb.utterance_id: project(model, emb, length_norm=length_norm)
            for emb in trials_emb
        }

        rows = []
        for enroll_id, test_id, _ in key_rows:
            if enroll_id not in enroll_mean:
                _fail(f"enrollment speaker {enroll_id!r} missing from {enroll_file}")
            if test_id not in trial_latents:
                _fail(f"trial utterance {test_id!r} missing from {trial_embeddings}")
            llr = plda_score(model, enroll_mean[enroll_id], trial_latents[test_id])
            rows.append((enroll_id, test_id, llr))

        out = Path(out_scores)
        _write_outputs(
            {
                out: formats.serialize_scores(rows),
                out.with_name(out.name + ".manifest"): _manifest(
                    "score",
                    {
                        "length_norm": "true" if length_norm else "false",
                        "n_trials": str(len(rows)),
                        "input_sha256_plda": formats.sha256_hex(_read(plda_file)),
                        "input_sha256_enroll": formats.sha256_hex(_read(enroll_file)),
                        "input_sha256_trial_embeddings": formats.sha256_hex(
                            _read(trial_embeddings)
                        ),
                        "input_sha256_trial_key": formats.sha256_hex(_read(trial_key)),
                    },
                ),
            }
        )
    except PseudovoxError as exc:
        _fail(str(exc))


# --- eval ---------------------------------------------------------------------


@main.command(name="eval")
@click.argument("score_file", type=click.Path())
@click.argument("trial_key", type=click.Path())
@click.option("--out", "out_file", type=click.Path(), default=None)
@click.pass_obj
def eval_cmd(obj, score_file, trial_key, out_file):
    """EER / Cllr / min-Cllr report from a score file and its trial key."""
    try:
        scores = formats.parse_scores(_read(score_file))
        key_rows = formats.parse_trials(_read(trial_key))
        score_by_trial = {(e, t): s for e, t, s in scores}
        key_set = {(e, t) for e, t, _ in key_rows}
        for pair in score_by_trial:
            if pair not in key_set:
                _fail(f"score for {pair!r} has no trial-key entry")
        target, nontarget = [], []
        for enroll_id, test_id, is_target in key_rows:
            if (enroll_id, test_id) not in score_by_trial:
                _fail(f"trial ({enroll_id!r}, {test_id!r}) has no score")
            (target if is_target else nontarget).append(
                score_by_trial[(enroll_id, test_id)]
            )
        score_set = TrialScoreSet(np.array(target), np.array(nontarget))
        report_text = formats.serialize_report(evaluate(score_set))
        click.echo(report_text, nl=False)
        outputs: dict[Path, str] = {}
        if out_file is not None:
            out = Path(out_file)
            outputs[out] = report_text
            outputs[out.with_name(out.name + ".manifest")] = _manifest(
                "eval",
                {
                    "input_sha256_scores": formats.sha256_hex(_read(score_file)),
                    "input_sha256_trial_key": formats.sha256_hex(_read(trial_key)),
                },
            )
        if obj.det_out is not None:
            outputs[Path(obj.det_out)] = formats.serialize_det(det_points(score_set))
        if outputs:
            _write_outputs(outputs)
    except PseudovoxError as exc:
        _fail(str(exc))


# --- simulate -------------------------------------------------------------------

_SIM_CONFIG_KEYS = {
    "n_speakers_per_gender": int,
    "utts_per_speaker": int,
    "embed_dim": int,
    "between_var": float,
    "within_var": float,
    "f0_mean_male": float,
    "f0_mean_female": float,
    "f0_between_std": float,
    "f0_within_std": float,
    "frames_per_utt": int,
    "seed": int,
    "attack": AttackModel,
    "f0_mode": F0Mode,
    "gender_policy": GenderPolicy,
    "enroll_seed": int,
    "trial_seed": int,
    "attacker": AttackerModel,
    "f0_weight": float,
    "k_far": int,
    "k_sel": int,
    "scorer": Scorer,
    "length_norm": bool,
}

_SIM_SEL_DEFAULTS = {"k_far": 12, "k_sel": 6, "length_norm": False}


def _build_simulation(resolved: dict) -> tuple[CohortSpec, ScenarioConfig, SelectionConfig]:
    cohort_kwargs = {}
    for key in (
        "n_speakers_per_gender",
        "utts_per_speaker",
        "embed_dim",
        "between_var",
        "within_var",
        "f0_between_std",
        "f0_within_std",
        "frames_per_utt",
        "seed",
    ):
        if key in resolved:
            cohort_kwargs[key] = resolved[key]
    if "f0_mean_male" in resolved or "f0_mean_female" in resolved:
        defaults = CohortSpec().f0_gender_means
        cohort_kwargs["f0_gender_means"] = {
            Gender.MALE: resolved.get("f0_mean_male", defaults[Gender.MALE]),
            Gender.FEMALE: resolved.get("f0_mean_female", defaults[Gender.FEMALE]),
        }
    scenario_kwargs = {"attack": resolved.get("attack", AttackModel.ORIGINAL_TO_ANONYMIZED)}
    for key in ("f0_mode", "gender_policy", "enroll_seed", "trial_seed", "attacker", "f0_weight"):
        if key in resolved:
            scenario_kwargs[key] = resolved[key]
    sel_kwargs = dict(_SIM_SEL_DEFAULTS)
    for key in ("k_far", "k_sel", "scorer", "length_norm"):
        if key in resolved:
            sel_kwargs[key] = resolved[key]
    return CohortSpec(**cohort_kwargs), ScenarioConfig(**scenario_kwargs), SelectionConfig(**sel_kwargs)


@main.command()
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--attack", type=click.Choice(["o-a", "a-a"]), default=None)
@click.option("--f0-mode", type=click.Choice(["original", "modified"]), default=None)
@click.option("--gender-policy", type=click.Choice(["same", "opposite"]), default=None)
@click.option("--enroll-seed", type=int, default=None)
@click.option("--trial-seed", type=int, default=None)
@click.option("--attacker", type=click.Choice(["embedding_only", "embedding_plus_f0"]), default=None)
@click.option("--f0-weight", type=float, default=None)
@click.option("--k-far", type=int, default=None)
@click.option("--k-sel", type=int, default=None)
@click.option("--scorer", type=click.Choice(["plda", "cosine"]), default=None)
@click.option("--n-speakers-per-gender", type=int, default=None)
@click.option("--utts-per-speaker", type=int, default=None)
@click.option("--embed-dim", type=int, default=None)
@click.option("--between-var", type=float, default=None)
@click.option("--within-var", type=float, default=None)
@click.option("--f0-mean-male", type=float, default=None)
@click.option("--f0-mean-female", type=float, default=None)
@click.option("--f0-between-std", type=float, default=None)
@click.option("--f0-within-std", type=float, default=None)
@click.option("--frames-per-utt", type=int, default=None)
@click.pass_obj
def simulate(obj, out_dir, **flags):
    """Generate a synthetic cohort and run one attack scenario over it."""
    try:
        config_text = None
        if obj.config is not None:
            config_text = _read(obj.config)
        cfg_values = _load_config(obj.config, _SIM_CONFIG_KEYS, "simulate")
        resolved = {
            key: _convert(key, raw, _SIM_CONFIG_KEYS[key]) for key, raw in cfg_values.items()
        }
        for key, value in flags.items():
            if value is None:
                continue
            resolved[key] = _SIM_CONFIG_KEYS[key](value) if isinstance(value, str) else value
        if obj.seed is not None:
            resolved["seed"] = obj.seed
        spec, scenario, sel = _build_simulation(resolved)

        cohort = generate_cohort(spec)
        result = run_scenario(cohort, scenario, sel, threads=obj.threads)

        score_rows = [(e, u, s) for e, u, s, _ in result.trial_rows]
        trial_rows = [(e, u, t) for e, u, _, t in result.trial_rows]
        user_embeddings = [
            SpeakerEmbedding(u.speaker_id, u.gender, u.embedding, u.utterance_id)
            for speaker in cohort.users
            for u in speaker.utterances
        ]
        user_contours = [u.contour for speaker in cohort.users for u in speaker.utterances]

        manifest_entries = {
            "cohort_seed": str(spec.seed),
            "enroll_seed": str(scenario.enroll_seed),
            "trial_seed": str(scenario.trial_seed),
            "attack": scenario.attack.value,
            "f0_mode": scenario.f0_mode.value,
            "gender_policy": scenario.gender_policy.value,
            "attacker": scenario.attacker.value,
            "f0_weight_used": (
                "none" if result.f0_weight_used is None
                else formats.format_float(result.f0_weight_used)
            ),
            "k_far": str(sel.k_far),
            "k_sel": str(sel.k_sel),
            "scorer": sel.scorer.value,
            "length_norm": "true" if sel.length_norm else "false",
            "n_speakers_per_gender": str(spec.n_speakers_per_gender),
            "utts_per_speaker": str(spec.utts_per_speaker),
            "embed_dim": str(spec.embed_dim),
            "between_var": formats.format_float(spec.between_var),
            "within_var": formats.format_float(spec.within_var),
            "f0_mean_male": formats.format_float(spec.f0_gender_means[Gender.MALE]),
            "f0_mean_female": formats.format_float(spec.f0_gender_means[Gender.FEMALE]),
            "f0_between_std": formats.format_float(spec.f0_between_std),
            "f0_within_std": formats.format_float(spec.f0_within_std),
            "frames_per_utt": str(spec.frames_per_utt),
        }
        if config_text is not None:
            manifest_entries["input_sha256_config"] = formats.sha256_hex(config_text)

        out = Path(out_dir)
        data_outputs = {
            "pool.txt": formats.serialize_pool(cohort.pool.speakers),
            "user_embeddings.txt": formats.serialize_embeddings(user_embeddings),
            "user_contours.txt": formats.serialize_contours(user_contours),
            "plda.txt": formats.serialize_plda(cohort.plda),
            "scores.txt": formats.serialize_scores(score_rows),
            "trials.txt": formats.serialize_trials(trial_rows),
            "report.txt": formats.serialize_report(result.report),
        }
        manifest_entries["n_trials"] = str(len(score_rows))
        for name, text in data_outputs.items():
            manifest_entries[f"output_sha256_{name.removesuffix('.txt')}"] = formats.sha256_hex(text)
        outputs = {out / name: text for name, text in data_outputs.items()}
        outputs[out / "manifest.txt"] = _manifest("simulate", manifest_entries)
        if obj.det_out is not None:
            outputs[Path(obj.det_out)] = formats.serialize_det(det_points(result.scores))
        _write_outputs(outputs)
    except PseudovoxError as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
