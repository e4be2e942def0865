"""Seeds, tolerances and regression constants used by the test suite.

Seeds were fixed before any statistic was inspected and are never
re-rolled. Tolerances marked "calibrated" were set from a first run whose
observed values are recorded alongside; tolerances taken verbatim from
the acceptance contract are marked "contract".

version 1
"""

# --- seeds -----------------------------------------------------------------
SEED_BOUNDED_4000 = 17   # gamma=1, N=4000, 500 replicas
SEED_BOUNDED_1000 = 11   # gamma=1, N=1000, 1000 replicas
SEED_GROWING_1000 = 13   # beta = N**c, N=1000, 1000 replicas per c
SEED_NU_4000 = 21        # beta = N**-1/2, alpha = N beta / 2, N=4000, 200 replicas
SEED_UNIT = 2024         # small unit-test samples

# --- contract tolerances ------------------------------------------------------
PARTITION_CLOSED_FORM_TOL = 1e-12
PARTITION_QUADRATURE_RTOL = 1e-6
TELESCOPING_TOL = 1e-10
FREE_ENERGY_TOL_1E3 = 0.05
FREE_ENERGY_TOL_1E5 = 0.01
BOUNDED_RATIO_RTOL = 0.01
GROWING_RATIO_RTOL = 0.02
EIGEN_ORACLE_TOL = 1e-10
MOMENT_SIGMAS = 3.0
KS_BOUNDED_MAX = 0.02
DISPERSION_RTOL = 0.10
CHI2_LEVEL = 0.01
INTENSITY_RTOL = 0.10
NU_CORRECTION_RTOL = 0.25
LINSTAT_SQUARE_TOL = 0.3
RHS_QUADRATURE_TOL = 1e-8
NULL_LEVEL_SLACK = 0.02

# --- regression constants (calibrated) ---------------------------------------
# theta at E=0, gamma=1 from the log-potential of the first 200 replicas of
# SEED_BOUNDED_4000. First run: log-potential -0.5717225 (se 0.00089),
# theta 0.359636 (se 0.00064). Cross-check on the same seed, all 500
# replicas, window [-4, 4]: empirical intensity 0.34625 (se 0.0098), 3.7%
# below theta. The tolerance only guards against silent changes to the
# sampler or the estimator; the sample itself is fixed by the seed.
THETA_BOUNDED_E0_G1 = 0.35963603871562
THETA_BOUNDED_E0_G1_RTOL = 1e-9

# First-run observations for the criteria with statistical margins, kept for
# reference (not asserted):
#   pooled moments at N=4000, gamma=1, 500 replicas, in standard errors from
#   the exact value: k=2 0.50, k=4 0.43, k=6 0.52, k=8 0.44
#   KS distance, gamma=1, N=1000, mu_gamma unfolding: 0.0029
#   KS distance, beta=N**c: c=-0.8 0.0049, c=-0.5 0.0247, c=-0.2 0.1014
#   var/mean of counts in [-2, 2], gamma=1, N=1000: 0.979, chi-square p 0.185 (4 dof)
