from .gradcheck import gradient_check  # noqa: F401
from .models import (  # noqa: F401
    ClassifierConfig,
    Model,
    TcnnConfig,
    augment_input,
    augment_samples,
    build_dsqcnn,
    build_tcnn,
    calibrate_sequence,
    classifier_forward,
    predict_label,
    predict_labels,
    train_classifier,
    train_tcnn,
)
from .serialize import load_model, save_model  # noqa: F401
