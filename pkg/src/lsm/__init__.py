"""Load-shape mining for smart-meter interval data.

The pipeline: ingest raw readings, cleanse them (gap filling, estimated-read
excision, account screening), average matching calendar days into
peak-normalized 24-hour profiles, cluster the profiles with seeded k-means,
and report peer groups, open/close hours, and cross-period drift.
"""

from .cleanse import (AccountAssessment, AccountCleanseStats, CleanseConfig,
                      CleanseReport, EstimatedRun, Gap, assess_account,
                      cleanse_pipeline, cleanse_series, detect_estimated_runs,
                      detect_gaps, fill_gap_cross_year, fill_gap_linear,
                      resolve_estimated_runs)
from .cluster import (Clustering, Init, KMeansConfig, SweepPoint,
                      clustering_from_dict, clustering_to_dict, kmeans,
                      load_clustering, objective, save_clustering, sweep_k)
from .errors import (AllZeroProfile, BadTimestamp, BoundaryMissing,
                     EmptyAccount, EmptyDays, EmptyProfileSet, GapTooLong,
                     InvalidSpec, IrregularInterval, KGreaterThanN,
                     LengthMismatch, LoadShapeError, ManifestConflict,
                     MissingHeader, NegativeEnergy, NoCommonAccounts,
                     NoMatchingDays, NonNumericEnergy, NoSiblingCoverage,
                     RowError, UnassignedAccount, UnknownAccount,
                     WrongInterval, ZeroMaximum)
from .ingest import assemble_series, parse_csv
from .metrics import (MEASURE_FUNCTIONS, DistanceMatrix, Measure, d_dos, d_e,
                      d_nm, d_rms, matrix_from_csv, matrix_to_csv,
                      pairwise_matrix)
from .profiles import (ALL_DAYS, WEEKDAYS, WEEKENDS, CalendarFilter,
                       DailyProfile, ProfileSet, aggregate_hourly,
                       average_profile, build_profiles, normalize_profile,
                       profiles_from_csv, profiles_to_csv, select_days)
from .report import (ClusterReport, Deviation, Direction, DriftReport, Flow,
                     OpenClose, adjusted_rand_index, cluster_means,
                     compare_periods, deviation_scan, emit_cluster_plot,
                     emit_summary, infer_open_close, summary_dict,
                     summary_text)
from .series import (VALID_INTERVALS, QualityFlag, RawReading, ReadingSeries,
                     flag_from_name, flag_name)
from .store import (STATUS_CLEANSED, STATUS_DROPPED, STATUS_RAW, MeterStore,
                    load_series, store_series)
from .synth import (ESTIMATED_RUN, LONG_GAP, SHORT_GAP, STANDARD_SHAPES,
                    DefectRecord, GroundTruth, ShapeSpec, SynthSpec, archetype,
                    generate_dataset, standard_shapes, write_dataset)

__version__ = "0.1.0"
