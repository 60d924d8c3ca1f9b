"""Frozen battery constants.

The inequalities verified by this package carry dimensional
constants that no closed form provides.  They are fitted on
the released battery by scripts/fit_constants.py (observed
extreme times a 1.2 margin; power-of-two search for the
exponent-type constants) and frozen here.  Any change
requires an explicit battery version bump so that
regressions stay detectable."""

FROZEN = {
    # sparse domination: C* bound per commutator order
    "domination_c_star": {0: 24.676, 1: 11.725, 2: 5.679},
    # strong weighted bound ratio LHS/RHS
    "strong_c": 1.278,
    # Coifman-Fefferman ratio LHS/RHS
    "cf_c": 1.639,
    # sup of the three-gauge inverse product over t,
    # divided by t (commutator gauge chain)
    "cf_chain_c": 18.233,
    # endpoint modular bound ratios
    "endpoint_c": 0.494,
    "endpoint_czo_c": 0.558,
    # pointwise bound of the loglog-bumped maximal
    # by the log-bumped one
    "czo_maximal_c_eps": 1.632,
    # local truncation bounds
    "lemmatec1_c": 4.8,
    "lemmatec2_c": 0.89,
    # weak (1,1) level-set constant of the truncation
    # maximal operator
    "weak11_c": 3.517,
    # absorption exponent constant per dimension
    "absorption_c_n": {1: 1.0, 2: 1.0},
    # reverse Holder constant per dimension
    "rhi_tau_n": {1: 1.0, 2: 1.0},
    # level-set decay envelope constant per dimension
    "jn_c_n": {1: 1.0, 2: 1.0},
    # oscillation exponential-norm constant
    "osc_exp_c": 6.527,
    # exponential decay counting bound
    "counting_c": 1.2,
    "counting_alpha": 0.5,
}

BATTERY_VERSION = 3
