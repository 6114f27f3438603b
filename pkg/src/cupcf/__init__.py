"""CUPCF: user-based collaborative filtering combining NHSM and Pearson neighbourhoods."""

from .dataset import (
    FoldSplit,
    RatingsMatrix,
    UserStats,
    item_mean,
    kfold_split,
    load_fold_files,
    load_ratings,
    user_stats,
    write_ratings,
)
from .errors import (
    ColdUserError,
    ConfigError,
    ContractError,
    CupcfError,
    DuplicateRatingError,
    NoDataError,
    ParseError,
    RatingRangeError,
)
from .evaluate import (
    ConfusionMatrix,
    EvalConfig,
    EvalReport,
    compare_measures,
    confusion_for_user,
    mae,
    metrics,
    run_experiment,
)
from .prediction import (
    CupModel,
    PredictConfig,
    Prediction,
    cup_predict,
    predict_all_unrated,
    predict_with_measure,
    select_neighbors,
)
from .recommend import RecommendationList, merge_lists, top_n
from .similarity import (
    PssFactors,
    SimilarityMatrix,
    build_similarity_matrix,
    jaccard_mod,
    nhsm_similarity,
    pearson_similarity,
    pss_factors,
)

__version__ = "0.1.0"
