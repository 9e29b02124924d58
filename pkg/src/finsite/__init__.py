"""Exact computations with finite-set-valued presheaves on finite sites:
finite categories, limits and colimits, Grothendieck topologies,
sheafification and separated/biseparated reflections, limit-preservation
checkers for reflections, and topology recovery."""

__version__ = "0.1.0"

from .errors import (BudgetExceededError, ParseError, RecoveryError,
                     TopologyAxiomError, ValidationError, WorkbenchError)
from .fincat import (CategoryDescription, FinCat, Morphism, Word, opposite,
                     validate_category)
from .presheaf import (Diagram, NatTrans, Presheaf, Subpresheaf, classify,
                       coequalizer, cokernel_pair, coproduct,
                       enumerate_presheaves, enumerate_subobjects, equalizer,
                       exponential, finite_colimit, finite_limit,
                       hom_presheaf_set, identity_nat, image_factorization,
                       initial, is_epi, is_iso, is_mono, isomorphic,
                       presheaf_from_generators, product, pullback, pushout,
                       subobject_classifier, terminal, validate_nat,
                       validate_presheaf, yoneda)
from .sites import (BiSite, GTopology, Sieve, biseparated_reflect, closure,
                    enumerate_sieves, fixpoint_biseparated_reflect,
                    generate_topology, is_biseparated, is_dense,
                    is_separated, is_sheaf, matching_families,
                    maximal_sieve, plus, pullback_sieve, separated_reflection,
                    sheafify, sieve_close, trivial_topology,
                    validate_topology)
from .reflector import (BisiteReflection, CheckReport, IdentityReflection,
                        ProbeSet, ReflectionOracle, TableReflection,
                        build_probe_set, certify_reflection,
                        check_classifies, check_e_equals_biseparated,
                        check_frobenius, check_preserves_monos,
                        check_preserves_products, check_quasi_lex,
                        check_semi_left_exact, check_stable_units,
                        is_orthogonal, is_separated_wrt, r_factorization,
                        recover_j, recover_k, run_checks,
                        transport_quasi_lex_failure, weak_classifier)
from .gallery import build_case, run_case
