"""Available-cases (pairwise deletion) estimation for data with missing values."""

from .errors import (AvailCasesError, ConvergenceError, DataError, NegativeEigenvalueError,
                     NumericalError, SimulationError, SingularMatrixError, UsageError)
from .frame import CategoricalFrame, CompleteRowView, NumericFrame, column_stats_available, complete_rows
from .moments import DenominatorPolicy, PairwiseMoments, pairwise_correlation, pairwise_moments
from .regression import (RegressionFit, bootstrap_se, delta_se, estimate_k_covariance, fit_ac,
                         fit_cc, fit_regression)
from .eigen import symmetric_eigen
from .pca import PcaFit, fit_pca, fit_pca_ac, fit_pca_cc
from .loglinear import (LoglinFit, ModelSpec, Table3, ac_expected_counts, ac_margin_probs,
                        cc_expected_counts, extract_lambdas, ipf, loglin, records_to_table,
                        table_to_records)
from .simulate import (LinearGaussianGenerator, LoglinEstimand, MarBiasReport, MarSpec, McarSpec,
                       PcaEstimand, RegressionEstimand, SimReport, SumOfPredictorsGenerator,
                       inject_mar, inject_mcar, mar_bias_study, run_variance_study)
from .io import (CsvDialect, load_pima, load_ucb_records, load_ucb_table, read_categorical,
                 read_counts_table, read_csv, write_csv)

__version__ = "0.1.0"
