"""
Run the invariant suite on every bundled profile
"""
import os
import sys

from anticyclo.config import PROFILE_DIR, load_config
from anticyclo.log import setup_logging
from anticyclo.reports import write_report
from anticyclo.verify import run_all_tests


def main() -> int:
    print("=" * 60)
    print("anticyclo invariant suite")
    print("=" * 60)

    profiles = sorted(f[: -len(".json")] for f in os.listdir(PROFILE_DIR) if f.endswith(".json"))
    summary = {}
    for name in profiles:
        config = load_config(profile=name)
        setup_logging(config.settings["log_level"])
        print(f"\nProfile {name} (n={config.n}, p={config.p}, N={config.N})")
        results, status = run_all_tests(config)
        summary[name] = {"results": results, "overall": status}

    os.makedirs("artifacts", exist_ok=True)
    write_report(summary, os.path.join("artifacts", "verify_profiles.json"))

    print("\n" + "=" * 60)
    failed = [name for name, entry in summary.items() if entry["overall"] == "fail"]
    for name, entry in summary.items():
        mark = "✗" if name in failed else "✓"
        passed = sum(1 for v in entry["results"].values() if v == "PASS")
        print(f"{mark} {name}: {passed}/{len(entry['results'])} checks passed")
    print("=" * 60)
    return 3 if failed else 0


if __name__ == '__main__':
    sys.exit(main())
