#!/usr/bin/env python3
"""Throughput benchmark: point-in-polygon assignment rate and the full
parse -> assign -> classify -> aggregate pipeline at a chosen scale.

    python scripts/benchmark.py [--events 1000000] [--tracts 300] [--partitions 4]
"""

import argparse
import os
import time
from pathlib import Path

import numpy as np

from geoineq.geo import build_spatial_index, tract_from_feature
from geoineq.ingest import parse_tracts
from geoineq.report import PipelineConfig, run_pipeline_full
from geoineq.synth import SynthParams, write_city


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--events", type=int, default=1_000_000)
    ap.add_argument("--tracts", type=int, default=300)
    ap.add_argument("--partitions", type=int, default=4)
    ap.add_argument("--workdir", default="bench_out")
    args = ap.parse_args()

    params = SynthParams(
        seed=42, n_tracts=args.tracts, n_users_local=2500, n_users_visitor=2500,
        n_events=args.events, zipf_s=1.0,
    )
    t0 = time.perf_counter()
    paths = write_city(params, args.workdir)
    print(f"generation: {time.perf_counter() - t0:.1f}s for {args.events} events")

    tracts = [tract_from_feature(f) for f in parse_tracts(Path(paths["tracts"]).read_bytes())]
    index = build_spatial_index(tracts)
    rng = np.random.default_rng(1)
    n = 1_000_000
    lons = rng.uniform(-74.31, -74.0, size=n)
    lats = rng.uniform(40.49, 40.80, size=n)
    t0 = time.perf_counter()
    assigned = index.assign_batch(lats, lons)
    dt = time.perf_counter() - t0
    print(
        f"assignment: {n} points over {len(tracts)} tracts in {dt:.2f}s "
        f"({n / dt:,.0f}/s, {int((assigned >= 0).sum())} inside)"
    )

    config = PipelineConfig(events_path=paths["events"], tracts_path=paths["tracts"])
    t0 = time.perf_counter()
    run_pipeline_full(config, partitions=1)
    single = time.perf_counter() - t0
    print(f"pipeline single-threaded: {single:.2f}s ({args.events / single:,.0f} events/s)")

    if args.partitions > 1:
        t0 = time.perf_counter()
        run_pipeline_full(config, partitions=args.partitions)
        multi = time.perf_counter() - t0
        cores = len(os.sched_getaffinity(0))
        print(
            f"pipeline {args.partitions} partitions: {multi:.2f}s "
            f"({single / multi:.2f}x vs single; {cores} usable core(s))"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
