#!/usr/bin/env python3
"""
revmine Initialization Script

This script prepares a fresh checkout with:
- run-history and generated-data directories
- a settings file with the built-in defaults
- a synthetic demo corpus and its guideline-simulated version
"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent))


def main():
    print("=" * 60)
    print("  revmine Initialization")
    print("  App-review feature extraction toolkit")
    print("=" * 60)
    print()

    # Import after path setup
    from revmine.corpus import compute_stats, save_corpus
    from revmine.guidelines import run_pipeline
    from revmine.settings import GENERATED_DIR, SETTINGS_PATH, SettingsManager, ensure_dirs
    from revmine.synthetic import SyntheticConfig, generate_corpus, generate_external

    # Ensure directories exist
    for dir_path in ensure_dirs():
        print(f"📁 {dir_path}")

    print()
    print("📦 Initializing settings...")
    settings = SettingsManager(SETTINGS_PATH)
    if not SETTINGS_PATH.exists():
        settings.save()
        print(f"  ✅ Wrote {SETTINGS_PATH}")
    else:
        print(f"  ✅ Using {SETTINGS_PATH}")

    print()
    print("🧪 Generating demo corpora...")
    seed = int(settings.get("run.seed", 42))
    corpus = generate_corpus(SyntheticConfig(seed=seed))
    save_corpus(corpus, GENERATED_DIR / "synthetic.jsonl")
    external = generate_external("laptop", 200, seed)
    save_corpus(external, GENERATED_DIR / "laptop.jsonl")
    stats = compute_stats(corpus, "a1")
    print(f"  ✅ synthetic.jsonl: {stats.n_reviews} reviews, {stats.feature_tokens} features, "
          f"{stats.feature_types} types")
    print(f"  ✅ laptop.jsonl: {len(external)} reviews")

    print()
    print("🔄 Simulating annotation guidelines...")
    simulated, reports = run_pipeline(corpus)
    save_corpus(simulated, GENERATED_DIR / "synthetic_simulated.jsonl")
    for report in reports:
        print(f"  - {report.step_name}: {report.spans_removed} spans, {report.reviews_removed} reviews removed")

    print()
    print("=" * 60)
    print("  ✅ revmine Initialization Complete!")
    print("=" * 60)
    print()
    print("Quick Start Commands:")
    print()
    print("  # Dataset statistics")
    print("  python -m revmine stats data/generated/synthetic.jsonl --per-category")
    print()
    print("  # Cross-category validation")
    print("  python -m revmine experiment data/generated/synthetic_simulated.jsonl --procedure ccv")
    print()
    print("  # Add external training data")
    print("  python -m revmine experiment data/generated/synthetic_simulated.jsonl "
          "--procedure ccv-ext --external data/generated/laptop.jsonl")
    print()
    print("  # Settings")
    print("  python -m revmine settings show")
    print()
    print("For more help: python -m revmine --help")
    print()


if __name__ == "__main__":
    main()
