"""Resolution-adaptive ADC bit allocation for hybrid mmWave MIMO receivers."""

from .allocator import (BIT_CAP, BitAllocation, allocate, integer_mapping,
                        mixed_adc_allocation, mmsqe_real_solution,
                        revmmsqe_real_solution, slow_switching_allocation,
                        tradeoff)
from .channel import (ChannelRealization, SystemConfig, UserDrop,
                      noise_power_dbm, pathloss_db, row_gains,
                      sample_beamspace_channel, sample_path_count,
                      sample_user_drop)
from .metrics import (MCStats, MultiCellScene, RateReport, analytic_rate,
                      analytic_rate_largepath, analytic_rate_multicell,
                      asymptotic_rate, capacity, capacity_low_snr,
                      capacity_low_snr_revba, ergodic_rate_mc, gmi_user,
                      mrc_rate_user, mrc_rates)
from .power import (PowerModel, PowerReport, adc_power, energy_efficiency,
                    receiver_power, switching_power)
from .quantizer import (ResolutionProfile, alpha, beta, beta_relaxed,
                        lloyd_max_beta_oracle, msqe,
                        quantization_noise_covariance)

__version__ = "0.1.0"
