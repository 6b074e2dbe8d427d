"""Command-line entry point: ``ofpstream <command> ...``.

Exit codes: 0 success, 1 verification/property failure, 2 usage error,
3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .dsp import DesignMode, StftConfig, Summation, make_window_pair, verify_cola
from .engine import Mode, StreamEngine, design_for, slot_count
from .errors import InvalidConfigError, OutOfRangeError, WavFormatError
from .losses import SI_SDR_CAP_DB, loss_wav_mag, loss_wav_mag_geq, si_sdr
from .predictors import WienerGatePredictor, make_predictor
from .simulate import SuiteSpec, generate_suite, read_manifest, synth_noise, synth_speechlike, \
    mix_at_snr, write_suite
from .wavio import wav_read, wav_write

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_MIN_RTF = 1.0

UTTERANCE_FIELDS = ("record", "id", "si_sdr_in", "si_sdr_out", "si_sdr_improvement",
                    "loss_wav_mag", "loss_wav_mag_geq", "alpha")
AGGREGATE_FIELDS = ("record", "count", "mean_si_sdr_in", "mean_si_sdr_out",
                    "mean_si_sdr_improvement", "mean_loss_wav_mag", "mean_loss_wav_mag_geq")


class UsageError(Exception):
    pass


def _config(args) -> StftConfig:
    try:
        return StftConfig.from_ms(args.win_ms, args.hop_ms, args.rate, args.n_fft)
    except InvalidConfigError as exc:
        raise UsageError(str(exc)) from exc


def _stft_args(p, rate=True):
    p.add_argument("--win-ms", type=float, default=32.0)
    p.add_argument("--hop-ms", type=float, default=8.0)
    if rate:
        p.add_argument("--rate", type=int, default=16000)
    p.add_argument("--n-fft", type=int, default=0, help="DFT size (default: next power of two)")


def _wiener_args(p):
    p.add_argument("--beta", type=float, default=0.98, help="decision-directed smoothing")
    p.add_argument("--gain-floor", type=float, default=0.1)
    p.add_argument("--noise-init-frames", type=int, default=5)


def _wiener_params(args) -> dict:
    if args.predictor != "wiener":
        return {}
    return {"beta": args.beta, "gain_floor": args.gain_floor,
            "noise_init_frames": args.noise_init_frames}


def _dump(record: dict, fields=None) -> str:
    if fields:
        record = {k: record[k] for k in fields if k in record}
    return json.dumps(record)


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else float("nan")


# -- design-window ------------------------------------------------------------

def cmd_design_window(args) -> int:
    cfg = _config(args)
    mode = DesignMode(args.mode)
    try:
        pair = make_window_pair(cfg, mode)
    except InvalidConfigError as exc:
        raise UsageError(str(exc)) from exc
    check = args.verify
    if check == "auto":
        check = "partial" if mode is DesignMode.REGULAR else "full"
    report = verify_cola(pair, Summation(check))
    if args.out:
        if args.out.endswith(".wav"):
            stem = args.out[:-4]
            wav_write(stem + "_analysis.wav", pair.analysis, cfg.sample_rate, "float32")
            wav_write(stem + "_synthesis.wav", pair.synthesis, cfg.sample_rate, "float32")
        else:
            np.savetxt(args.out, np.column_stack((pair.analysis, pair.synthesis)),
                       fmt="%.17g", header="analysis synthesis")
    print(json.dumps({
        "window": cfg.window_size, "hop": cfg.hop_size, "design": mode.value,
        "summation": check, "max_deviation": report.max_deviation, "pass": report.passed,
    }))
    return EXIT_OK if report.passed else EXIT_FAIL


# -- simulate -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    spec = SuiteSpec(args.seed_base, args.count, args.snr_lo, args.snr_hi, args.duration, args.rate)
    records = generate_suite(spec) if args.count else []
    path = write_suite(records, args.out_dir)
    print(json.dumps({"manifest": path, "count": len(records)}))
    return EXIT_OK


# -- enhance --------------------------------------------------------------------

def _run_stream(signal, cfg, mode, predictor, chunk):
    pair = make_window_pair(cfg, design_for(mode))
    engine = StreamEngine(cfg, pair, mode, predictor)
    start = time.perf_counter()
    pieces = [engine.push_samples(signal[i:i + chunk]) for i in range(0, len(signal), chunk)]
    pieces.append(engine.finalize())
    elapsed = time.perf_counter() - start
    return np.concatenate(pieces), engine, elapsed


def _utterance_record(uid, est, clean, mixture, cfg) -> dict:
    rec = {"record": "utterance", "id": uid,
           "si_sdr_in": si_sdr(mixture, clean), "si_sdr_out": si_sdr(est, clean)}
    rec["si_sdr_improvement"] = rec["si_sdr_out"] - rec["si_sdr_in"]
    rec["loss_wav_mag"] = loss_wav_mag(est, clean, cfg).total
    if np.any(est):
        geq = loss_wav_mag_geq(est, clean, cfg)
        rec["loss_wav_mag_geq"], rec["alpha"] = geq.total, geq.alpha
    else:
        rec["loss_wav_mag_geq"], rec["alpha"] = None, None
    return rec


def _aggregate(records) -> dict:
    records = sorted(records, key=lambda r: r["id"])
    agg = {"record": "aggregate", "count": len(records)}
    for key in ("si_sdr_in", "si_sdr_out", "si_sdr_improvement", "loss_wav_mag", "loss_wav_mag_geq"):
        vals = [r[key] for r in records if r.get(key) is not None]
        agg["mean_" + key] = _mean(vals)
    return agg


def _write_report(path, config_rec, utterances, timing=None):
    lines = [_dump(config_rec)]
    lines += [_dump(r, UTTERANCE_FIELDS) for r in sorted(utterances, key=lambda r: r["id"])]
    lines.append(_dump(_aggregate(utterances), AGGREGATE_FIELDS))
    if timing is not None:
        lines.append(_dump(timing))
    text = "".join(line + "\n" for line in lines)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def cmd_enhance(args) -> int:
    cfg = _config(args)
    mode = Mode(args.mode)
    k = slot_count(mode, cfg)
    chunk = args.chunk or cfg.hop_size
    if chunk < 1:
        raise UsageError("--chunk must be positive")
    params = _wiener_params(args)
    recorded = WienerGatePredictor(cfg, k, **params).params() if args.predictor == "wiener" else {}
    config_rec = {"record": "config", "window_ms": args.win_ms, "hop_ms": args.hop_ms,
                  "window": cfg.window_size, "hop": cfg.hop_size, "n_fft": cfg.n_fft,
                  "sample_rate": cfg.sample_rate, "mode": mode.value,
                  "predictor": args.predictor, "params": recorded, "chunk": chunk,
                  "si_sdr_cap_db": SI_SDR_CAP_DB}

    if args.manifest:
        if not args.out:
            raise UsageError("--manifest needs --out (an output directory)")
        os.makedirs(args.out, exist_ok=True)
        entries = read_manifest(args.manifest)
        utterances, audio_s, busy_s, latency = [], 0.0, 0.0, None
        for entry in entries:
            mixture, rate = wav_read(entry["path"])
            clean, _ = wav_read(entry["clean"])
            _check_rate(rate, cfg)
            predictor = make_predictor(args.predictor, cfg, k, reference=clean, **params)
            est, engine, elapsed = _run_stream(mixture, cfg, mode, predictor, chunk)
            wav_write(os.path.join(args.out, entry["id"] + ".wav"), est, rate, "float32")
            utterances.append(_utterance_record(entry["id"], est, clean, mixture, cfg))
            audio_s += len(mixture) / rate
            busy_s += elapsed
            if len(mixture):
                latency = engine.measured_latency()
        timing = {"record": "timing", "wall_clock_s": busy_s, "audio_s": audio_s,
                  "realtime_factor": audio_s / busy_s if busy_s else None,
                  "latency_samples": latency,
                  "latency_ms": cfg.samples_to_ms(latency) if latency is not None else None}
        text = _write_report(args.report, config_rec, utterances, timing)
        sys.stdout.write(text)
        return EXIT_OK

    if not args.input or not args.out:
        raise UsageError("enhance needs --in and --out (or --manifest)")
    if args.predictor == "oracle" and not args.ref:
        raise UsageError("the oracle predictor needs --ref")
    signal, rate = wav_read(args.input)
    _check_rate(rate, cfg)
    ref = None
    if args.ref:
        ref, ref_rate = wav_read(args.ref)
        if len(ref) != len(signal) or ref_rate != rate:
            raise UsageError("--ref must match --in in length and sample rate")
    predictor = make_predictor(args.predictor, cfg, k, reference=ref, **params)
    est, engine, elapsed = _run_stream(signal, cfg, mode, predictor, chunk)
    wav_write(args.out, est, rate, args.format)
    summary = {"out": args.out, "samples": len(est), "mode": mode.value, "predictor": args.predictor,
               "wall_clock_s": elapsed,
               "realtime_factor": (len(signal) / rate) / elapsed if elapsed else None}
    if len(signal):
        lat = engine.measured_latency()
        summary.update(latency_samples=lat, latency_ms=cfg.samples_to_ms(lat))
    if ref is not None and np.any(ref):
        summary.update(si_sdr_in=si_sdr(signal, ref), si_sdr_out=si_sdr(est, ref))
    print(json.dumps(summary))
    return EXIT_OK


def _check_rate(rate, cfg):
    if rate != cfg.sample_rate:
        raise UsageError(f"input is {rate} Hz but --rate is {cfg.sample_rate} Hz")


# -- evaluate -------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    cfg = _config(args)
    entries = read_manifest(args.manifest)
    utterances = []
    for entry in sorted(entries, key=lambda e: e["id"]):
        clean, rate = wav_read(entry["clean"])
        mixture, _ = wav_read(entry["path"])
        est, est_rate = wav_read(os.path.join(args.est_dir, entry["id"] + ".wav"))
        if len(est) != len(clean) or est_rate != rate:
            print(f"error: estimate {entry['id']} does not match its reference", file=sys.stderr)
            return EXIT_FAIL
        utterances.append(_utterance_record(entry["id"], est, clean, mixture, cfg))
    config_rec = {"record": "config", "window_ms": args.win_ms, "hop_ms": args.hop_ms,
                  "sample_rate": cfg.sample_rate, "est_dir": os.path.basename(os.path.normpath(args.est_dir)),
                  "si_sdr_cap_db": SI_SDR_CAP_DB}
    text = _write_report(args.out_report, config_rec, utterances)
    if not args.out_report:
        sys.stdout.write(text)
    return EXIT_OK


# -- bench ----------------------------------------------------------------------

def bench(cfg: StftConfig, mode: Mode, predictor_name: str, seconds: float, seed: int = 0) -> dict:
    """Stream synthetic audio hop by hop and time each frame."""
    clean = synth_speechlike(seed, seconds, cfg.sample_rate)
    noise = synth_noise(seed, seconds, cfg.sample_rate, "pink")
    mixture = mix_at_snr(clean, noise, 0.0).mixture
    k = slot_count(mode, cfg)
    predictor = make_predictor(predictor_name, cfg, k, reference=clean)
    engine = StreamEngine(cfg, make_window_pair(cfg, design_for(mode)), mode, predictor)
    h = cfg.hop_size
    per_frame = []
    start = time.perf_counter()
    for i in range(0, len(mixture), h):
        t0 = time.perf_counter()
        engine.push_samples(mixture[i:i + h])
        per_frame.append(time.perf_counter() - t0)
    engine.finalize()
    elapsed = time.perf_counter() - start
    per_frame_us = np.asarray(per_frame) * 1e6
    return {
        "window": cfg.window_size, "hop": cfg.hop_size, "mode": mode.value,
        "predictor": predictor_name, "audio_s": seconds, "wall_clock_s": elapsed,
        "frames": engine.frames_consumed,
        "frames_per_s": engine.frames_consumed / elapsed,
        "realtime_factor": seconds / elapsed,
        "frame_us_p50": float(np.percentile(per_frame_us, 50)),
        "frame_us_p90": float(np.percentile(per_frame_us, 90)),
        "frame_us_p99": float(np.percentile(per_frame_us, 99)),
        "latency_samples": engine.measured_latency(),
    }


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.seconds <= 0:
        raise UsageError("--seconds must be positive")
    result = bench(cfg, Mode(args.mode), args.predictor, args.seconds, args.seed)
    result["min_realtime_factor"] = args.min_rtf
    result["pass"] = result["realtime_factor"] > args.min_rtf
    print(json.dumps(result))
    return EXIT_OK if result["pass"] else EXIT_FAIL


# -- wiring ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ofpstream", description="Streaming STFT overlap-add engine with overlapped-frame prediction.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-window", help="design and verify an analysis/synthesis window pair")
    _stft_args(p)
    p.add_argument("--mode", choices=[m.value for m in DesignMode], default="regular")
    p.add_argument("--verify", choices=["auto", "partial", "full"], default="auto")
    p.add_argument("--out", help="output .wav (two files) or text file")
    p.set_defaults(func=cmd_design_window)

    p = sub.add_parser("simulate", help="materialise synthetic mixtures and a manifest")
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--snr-lo", type=float, default=-8.0)
    p.add_argument("--snr-hi", type=float, default=3.0)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--rate", type=int, default=16000)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("enhance", help="stream audio through the engine")
    p.add_argument("--in", dest="input")
    p.add_argument("--manifest", help="process every mixture of a simulate manifest")
    p.add_argument("--ref", help="clean reference (enables the oracle predictor)")
    p.add_argument("--predictor", choices=["oracle", "passthrough", "wiener"], default="wiener")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="overlap-partial")
    _stft_args(p)
    p.add_argument("--chunk", type=int, default=0, help="samples per push (default: hop)")
    p.add_argument("--out", help="output WAV, or directory with --manifest")
    p.add_argument("--report", help="run report path (with --manifest)")
    p.add_argument("--format", choices=["float32", "pcm16"], default="float32")
    _wiener_args(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("evaluate", help="score estimates against a manifest")
    p.add_argument("--est-dir", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-report")
    _stft_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="throughput and per-frame timing on synthetic audio")
    _stft_args(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="overlap-partial")
    p.add_argument("--predictor", choices=["oracle", "passthrough", "wiener"], default="wiener")
    p.add_argument("--seconds", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-rtf", type=float, default=DEFAULT_MIN_RTF)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, WavFormatError, json.JSONDecodeError, KeyError) as exc:
        print(f"{parser.prog}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidConfigError, OutOfRangeError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
