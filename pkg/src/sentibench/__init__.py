"""Binary review-sentiment benchmark: TF-IDF with linear and boosted-tree
classifiers, and a numpy BiLSTM with attention pooling."""

from .corpus_io import RawReview, load_corpus, stratified_split
from .evaluation import cross_validate, evaluate
from .gbdt import GbdtClassifier
from .linear_models import LinearSVMClassifier, LogisticRegressionClassifier
from .neural.estimator import BiLSTMAttentionClassifier
from .preprocess import TextPreprocessor, preprocess_text
from .tfidf import SparseMinMaxScaler, TfidfVectorizer

__version__ = "0.1.0"

__all__ = [
    "BiLSTMAttentionClassifier", "GbdtClassifier", "LinearSVMClassifier",
    "LogisticRegressionClassifier", "RawReview", "SparseMinMaxScaler", "TextPreprocessor",
    "TfidfVectorizer", "cross_validate", "evaluate", "load_corpus", "preprocess_text",
    "stratified_split",
]
