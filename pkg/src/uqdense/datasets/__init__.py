from .csvio import AlphaDataset, ingest_csv, write_alpha_csv, write_local_csv
from .features import (
    LOCAL_INPUT_NAMES,
    doy_ut,
    global_inputs,
    local_inputs,
    local_inputs_from,
    lst_features,
    time_features,
)
from .scaling import Scaler, apply_scaler, fit_scaler, invert_scaler
from .splits import SplitIndex, contiguous_segments, split_global, split_random, split_rolling
from .synth import (
    CHAMP_DRIVERS,
    HASDM_DRIVERS,
    DriverRecord,
    DriverSeries,
    LocalDataset,
    LocalSample,
    concat_local,
    grid_log10_truth,
    log10_density_clean,
    log10_noise_sigma,
    synth_drivers,
    synth_global,
    synth_global_series,
    synth_insitu,
    synth_insitu_spread,
)
from .toy import toy_generate, toy_mean, toy_sigma
