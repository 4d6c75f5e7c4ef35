"""
Invariant suite: named property checks run against a pipeline profile
"""
import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from anticyclo import autforms, branching, dist, family, lfun
from anticyclo.autforms import ClassSetModel, ModularForm
from anticyclo.coeff import ring_make, valuation
from anticyclo.config import PipelineConfig
from anticyclo.errors import PreconditionError
from anticyclo.padic_linalg import unit_part
from anticyclo.weights import AffinoidWeight, crit_set, interlacing_weights, lambda_direction

logger = logging.getLogger(__name__)

PASS = "PASS"


class SkipCheck(Exception):
    """Raised by a check that does not apply to the profile"""


class InvariantSuite:
    """Property checks grouped by module, sharing models and eigenforms across checks"""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.settings = config.settings
        self._model: Optional[ClassSetModel] = None
        self._eigenforms: Dict[int, ModularForm] = {}

    # shared inputs

    @property
    def form_degree(self) -> int:
        return int(self.settings.get("form_degree", 3))

    @property
    def family_degree(self) -> int:
        return int(self.settings.get("family_degree", 4))

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng(int(self.settings["seed"]) + offset)

    def model(self) -> ClassSetModel:
        cfg = self.config
        if cfg.class_set is None:
            raise SkipCheck("profile has no class-set model")
        if self._model is None:
            self._model = autforms.load_class_set(cfg.class_set)
        return self._model

    def require_kappa(self):
        if self.config.n != 1:
            raise SkipCheck("kappa needs c to be a unit on N^1")

    def refinements(self) -> List[int]:
        alphas = [int(r["alpha"]) for r in self.config.refinements]
        if not alphas:
            raise SkipCheck("profile declares no refinements")
        return alphas

    def eigenform(self, alpha: int) -> ModularForm:
        if alpha not in self._eigenforms:
            cfg = self.config
            self._eigenforms[alpha] = autforms.eigenform(
                self.model(), cfg.weight, alpha, cfg.level, self.form_degree, cfg.ring()
            )
        return self._eigenforms[alpha]

    def samples(self, default: int) -> int:
        return int(self.settings.get("samples", default))

    # branching

    def test_multiplicity_one(self):
        """Every interlacing weight carries exactly one H-invariant line"""
        cfg = self.config
        bound = int(self.settings.get("weight_bound", 3))
        cap = int(self.settings["degree_cap"])
        checked = 0
        for w in interlacing_weights(cfg.n, bound):
            try:
                branching.build_u_direct(w, cap)
            except PreconditionError as e:
                if e.code == "branching.degree_cap":
                    continue
                raise
            checked += 1
        assert checked > 0, "no weight fits under the degree cap"
        logger.info("multiplicity one on %d weights", checked)

    def test_product_formula(self):
        """build_u equals the directly solved invariant up to scaling"""
        cfg = self.config
        bound = int(self.settings.get("weight_bound", 3))
        cap = int(self.settings["degree_cap"])
        for w in interlacing_weights(cfg.n, bound):
            try:
                direct = branching.build_u_direct(w, cap)
            except PreconditionError as e:
                if e.code == "branching.degree_cap":
                    continue
                raise
            assert branching.same_line(branching.build_u(w), direct), f"product formula fails at {w.to_json()}"

    def test_support_property(self):
        """u_(mu,lambda) is a unit on N^1 and every point of N^1 factors through (g0, 1)"""
        if self.config.n != 1:
            raise SkipCheck("the generators v_ii with i < n vanish on N^1")
        count = self.samples(20) * 10
        for p in (3, 5):
            ring = ring_make(p, self.config.N)
            rng = self.rng(p)
            u = branching.weight_function(self.config.weight)
            for _ in range(count):
                x = branching.random_N1(1, ring, rng)
                assert valuation(u.evaluate(x)) == 0, f"u vanishes mod {p} on N^1"
                assert branching.factor_N1(x).holds()

    def test_orbit(self):
        for n in (1, 2, 3):
            assert branching.orbit_witness(n)["holds"], f"orbit identity fails for n={n}"

    # dist

    def test_interpolation_diagram(self):
        """int z^j d kappa(xi) = xi(u_(mu, lambda + j)) for every critical j"""
        self.require_kappa()
        cfg = self.config
        ring = cfg.ring()
        p, r, d = cfg.p, cfg.level, cfg.degree
        W = cfg.N + r + d + 4
        digits = min(6, cfg.N - 2)
        rng = self.rng(1)
        twists = list(crit_set(cfg.weight))
        for _ in range(self.samples(50)):
            xi = dist.random_distribution(ring, "N", r, d, rng, cosets=dist.n1_cosets(p, r))
            mu = dist.kappa(xi, cfg.weight)
            for j in twists:
                lhs = dist.pair(mu, dist.LocAnFunction.power(p, "Zpx", r, d, j, ring.modulus))
                shifted = cfg.weight.shift(j)
                f = dist.LocAnFunction.from_series(p, "N", r, d, xi.cosets(), lambda z: dist.weight_series(shifted, z), W)
                rhs = dist.pair(xi, f)
                assert lhs.congruent(rhs, digits), f"moment {j} disagrees"

    def test_kappa_specialization(self):
        """Specializing kappa over the weight disc commutes with kappa at the point"""
        self.require_kappa()
        cfg = self.config
        p, r, d = cfg.p, cfg.level, cfg.degree
        omega = AffinoidWeight(cfg.weight, (lambda_direction(cfg.n),))
        ring = ring_make(p, cfg.N, 1, 1, cfg.D)
        point = [p * p]
        rng = self.rng(2)
        for _ in range(self.samples(20)):
            xi = dist.random_distribution(ring, "N", r, d, rng, cosets=dist.n1_cosets(p, r))
            lhs = dist.specialize_dist(dist.kappa(xi, omega), point)
            rhs = dist.kappa(dist.specialize_dist(xi, point), omega.at(point))
            assert dist.agree(lhs, rhs, cfg.N - 2), "kappa square does not commute"

    # autforms

    def test_up_specialization(self):
        """U_p commutes with specialization of affinoid forms"""
        cfg = self.config
        model = self.model()
        omega = AffinoidWeight(cfg.weight, (lambda_direction(cfg.n),))
        ring = ring_make(cfg.p, cfg.N, 1, 1, cfg.D)
        point = [cfg.p ** 2]
        seed = int(self.settings["seed"])
        for i in range(self.samples(20)):
            phi = autforms.random_form(model, omega, ring, cfg.level, self.form_degree, seed + i)
            lhs = autforms.specialize_form(autforms.up_apply(phi), point)
            rhs = autforms.up_apply(autforms.specialize_form(phi, point))
            for x in model.classes:
                assert dist.agree(lhs.values[x], rhs.values[x], cfg.N - 2), f"U_p square fails at class {x}"

    def test_up_well_defined(self):
        """Rerandomized coset representatives give the same U_p matrix"""
        cfg = self.config
        model = self.model()
        ring = cfg.ring()
        U = autforms.up_matrix(model, cfg.weight, cfg.level, self.form_degree, ring)
        V = autforms.up_matrix(
            autforms.rerandomize_representatives(model, int(self.settings["seed"]) + 3),
            cfg.weight,
            cfg.level,
            self.form_degree,
            ring,
        )
        assert U.center() == V.center(), "U_p depends on the coset representatives"

    def test_eigenspaces(self):
        """Each refinement is a simple eigenvalue with a classical eigenform"""
        cfg = self.config
        model = self.model()
        for alpha in self.refinements():
            report = autforms.localize(model, cfg.weight, alpha, cfg.level, self.form_degree, cfg.ring())
            assert report.dimension == 1, f"alpha={alpha} has eigenspace dimension {report.dimension}"
            phi = self.eigenform(alpha)
            assert autforms.check_eigen(phi, alpha, cfg.N)
            projection = autforms.classical_project(phi)
            assert any(not x.is_zero() for row in projection.values() for x in row), "classical projection vanishes"

    def test_coset_count(self):
        for n in (1, 2, 3):
            assert autforms.coset_count_check(n, self.config.p)["holds"]

    # lfun

    def test_beta_independence(self):
        """alpha^{-beta} times the level-beta period sum does not depend on beta"""
        self.require_kappa()
        cfg = self.config
        for alpha in self.refinements():
            v, _ = unit_part(alpha, cfg.p)
            digits = cfg.N - 3 * v - 2
            if digits <= 0:
                raise SkipCheck(f"precision N={cfg.N} cannot resolve slope {v}")
            phi = self.eigenform(alpha)
            base = lfun.build_Lp(phi, alpha, 1)
            for beta in range(2, cfg.beta_max + 1):
                L = lfun.build_Lp(phi, alpha, beta, check=False)
                assert lfun.agree_lfunctions(base, L, digits), f"alpha={alpha}: beta={beta} disagrees with beta=1"

    def test_growth(self):
        """Measured growth stays within the slope; a Dirac measure has none"""
        cfg = self.config
        dirac = dist.dirac(cfg.ring(), "Zpx", 1, 4, cfg.degree)
        assert dist.growth_report(dirac, 4).h == 0, "Dirac control has nonzero growth"
        self.require_kappa()
        for alpha in self.refinements():
            L = lfun.build_Lp(self.eigenform(alpha), alpha, cfg.beta_max, check=False)
            cert = lfun.certify_growth(L, min(4, L.dist.level))
            assert cert.certified, f"alpha={alpha}: growth {cert.report.h} exceeds slope {cert.slope}"

    def test_character_values(self):
        """Character values of L match the twisted periods computed without kappa"""
        self.require_kappa()
        cfg = self.config
        if not cfg.characters:
            raise SkipCheck("profile declares no characters")
        for alpha in self.refinements():
            phi = self.eigenform(alpha)
            built: Dict[int, lfun.PadicLFunction] = {}
            for payload in cfg.characters:
                chi = lfun.AnticyclotomicCharacter.from_json(payload)
                beta = max(1, chi.beta)
                if beta not in built:
                    built[beta] = lfun.build_Lp(phi, alpha, beta, check=False)
                value = lfun.eval_character(built[beta], chi, cfg.character_ring())
                expected = lfun.twisted_period(phi, alpha, beta, chi, cfg.character_ring())
                assert value.value.congruent(expected, cfg.N - 2), f"alpha={alpha}: {chi.to_json()} disagrees"

    def test_gauss_identity(self):
        for p in (3, 5, 7):
            for beta in (1, 2):
                for chi in lfun.enumerate_characters(p, beta, primitive_only=True):
                    assert lfun.gauss_identity(chi, self.config.N), f"Gauss identity fails for {chi.to_json()}"

    def test_index_formula(self):
        for n in (1, 2):
            for p in (2, 3):
                for beta in (1, 2):
                    report = lfun.index_check(n, p, beta)
                    assert report["holds"], f"index {report['enumerated']} != {report['formula']} at n={n}, p={p}, beta={beta}"

    def test_correction_chain(self):
        cfg = self.config
        for beta in range(1, cfg.beta_max + 1):
            report = lfun.correction_chain(cfg.n, cfg.p, beta, 1)
            assert report["consistent"], f"residual p^{report['residual']} at beta={beta}"

    # family

    def test_family_lift(self):
        """Center reproduces the eigenform; a neighboring point is eigen with the specialized eigenvalue"""
        self.require_kappa()
        cfg = self.config
        D = self.family_degree
        omega = AffinoidWeight(cfg.weight, (lambda_direction(cfg.n),))
        for alpha in self.refinements():
            phi = self.eigenform(alpha)
            F = family.lift_family(phi, alpha, omega, D)
            assert F.residual >= cfg.N - 2
            center = family.specialize_family(F, [0])
            assert (center.eigenvalue - alpha) % cfg.ring().modulus == 0, "center eigenvalue moved"
            for x in phi.model.classes:
                assert dist.agree(center.form.values[x], phi.values[x], cfg.N), "center is not the input eigenform"
            neighbor = family.specialize_family(F, [cfg.p])
            assert autforms.check_eigen(neighbor.form, neighbor.eigenvalue, cfg.N - D - 1), "neighbor is not eigen"
            if alpha % cfg.p:
                L = family.specialize_Lp(family.family_Lp(F, 1), [0])
                assert lfun.agree_lfunctions(L, lfun.build_Lp(phi, alpha, 1), cfg.N - 2), "two-variable L misses its center"

    def checks(self) -> List[Tuple[str, Callable[[], None]]]:
        return [
            ("branching.multiplicity_one", self.test_multiplicity_one),
            ("branching.product_formula", self.test_product_formula),
            ("branching.support_property", self.test_support_property),
            ("branching.orbit", self.test_orbit),
            ("dist.interpolation_diagram", self.test_interpolation_diagram),
            ("dist.kappa_specialization", self.test_kappa_specialization),
            ("autforms.coset_count", self.test_coset_count),
            ("autforms.up_well_defined", self.test_up_well_defined),
            ("autforms.up_specialization", self.test_up_specialization),
            ("autforms.eigenspaces", self.test_eigenspaces),
            ("lfun.gauss_identity", self.test_gauss_identity),
            ("lfun.index_formula", self.test_index_formula),
            ("lfun.correction_chain", self.test_correction_chain),
            ("lfun.beta_independence", self.test_beta_independence),
            ("lfun.growth", self.test_growth),
            ("lfun.character_values", self.test_character_values),
            ("family.lift", self.test_family_lift),
        ]

    def run_all_tests(self, only: Optional[List[str]] = None) -> Dict[str, str]:
        """Run every enabled check; never raises"""
        tests = [(name, fn) for name, fn in self.checks() if self.config.suite_enabled(name.split(".")[0])]
        if only:
            tests = [(name, fn) for name, fn in tests if name in only or name.split(".")[0] in only]

        results = {}
        progress = tqdm(tests, desc=self.config.name, disable=not self.settings.get("enable_progress", True))
        for name, test_func in progress:
            progress.set_postfix_str(name)
            try:
                test_func()
                results[name] = PASS
                print(f"✓ {name}: PASS")
            except SkipCheck as e:
                results[name] = f"SKIP: {e}"
                print(f"- {name}: SKIP - {e}")
            except Exception as e:
                logger.debug("check %s failed", name, exc_info=True)
                results[name] = f"FAIL: {e}"
                print(f"✗ {name}: FAIL - {e}")
        return results


def overall_status(results: Dict[str, str]) -> str:
    return "fail" if any(v.startswith("FAIL") for v in results.values()) else "pass"


def run_all_tests(config: PipelineConfig, only: Optional[List[str]] = None) -> Tuple[Dict[str, str], str]:
    results = InvariantSuite(config).run_all_tests(only)
    return results, overall_status(results)
