from anticyclo.config import load_config
from anticyclo.verify import PASS, InvariantSuite, overall_status, run_all_tests


def _config(name):
    return load_config(profile=name, overrides={"settings.enable_progress": False})


def test_n2_profile_runs_model_checks():
    only = ["autforms", "lfun.correction_chain", "lfun.beta_independence", "lfun.growth", "lfun.character_values", "branching.orbit"]
    results, status = run_all_tests(_config("n2-p3"), only)
    for name in ("autforms.coset_count", "autforms.up_well_defined", "autforms.up_specialization", "autforms.eigenspaces"):
        assert results[name] == PASS
    for name in ("lfun.beta_independence", "lfun.growth", "lfun.character_values"):
        assert results[name].startswith("SKIP")
    assert results["lfun.correction_chain"] == PASS
    assert results["branching.orbit"] == PASS
    assert status == "pass"


def test_disabled_suites_are_not_run():
    results, _ = run_all_tests(_config("n2-p3"), ["family"])
    assert results == {}


def test_failures_are_reported_not_raised():
    class Broken(InvariantSuite):
        def checks(self):
            def fails():
                raise AssertionError("identity does not hold")

            def errors():
                raise ValueError("unexpected")

            return [("lfun.fails", fails), ("lfun.errors", errors), ("lfun.orbit", self.test_orbit)]

    results = Broken(_config("n1-p3")).run_all_tests()
    assert results["lfun.fails"] == "FAIL: identity does not hold"
    assert results["lfun.errors"].startswith("FAIL")
    assert results["lfun.orbit"] == PASS
    assert overall_status(results) == "fail"

