"""Closed-form Bayesian training and prediction for a single perceptron."""

from ._kernels import BACKEND
from .activations import (
    Activation,
    OutputMoments,
    output_moments,
    pwl_cross_cov,
    pwl_mean_var,
    sigmoid_cross_cov,
    sigmoid_mean_var,
)
from .gaussian import (
    Gaussian1D,
    PartialMoments,
    WeightPosterior,
    affine_forward,
    partial_moments,
    posterior_reweight,
    std_normal_cdf,
    std_normal_pdf,
)
from .perceptron import (
    BayesianPerceptron,
    Prediction,
    TrainingError,
    TrainingInstance,
    classify,
    fit,
    predict,
    predict_batch,
    refine_preactivation,
    update,
)

__version__ = "0.1.0"
