"""Carrier phase recovery for probabilistically shaped 16-QAM.

Monte-Carlo toolkit around the QPSK-partition phase estimator: shaped
sources, the Wiener phase noise + AWGN channel, MAP ring decision
thresholds, weighted fourth-power recovery, and MI/MSE metrics with a
sweep harness that reproduces the reference study's figures as data.
"""

from .channel import (
    ChannelParams,
    ChannelRealization,
    apply_channel,
    generate_symbols,
    simulate,
    wiener_phase,
)
from .constellation import (
    Constellation,
    ShapedSource,
    build_16qam,
    lambda_for_entropy,
    shaped_source,
)
from .cpr import CprConfig, CprResult, classify_rings, genie_slip_correct, run_cpr, unwrap, vv_estimate
from .decision import (
    RingModel,
    Thresholds,
    decision_error_probability,
    estimate_noise_variance,
    map_threshold_pair,
    median_thresholds,
    mixture_pdf,
    rician_pdf,
)
from .harness import (
    SweepPoint,
    SweepRecord,
    SweepSpec,
    preset_points,
    run_point,
    run_sweep,
    run_to_file,
    threshold_table,
)
from .metrics import MetricReport, estimate_mi, optimal_lambda, phase_mse, theoretical_mi

__version__ = "0.1.0"
