"""EEG task-difficulty classification toolkit.

Spectral coherence features, stability-voted recursive feature
elimination, an SMO-trained kernel SVM, and a from-scratch convolutional
network on raw 2-second epochs, evaluated under subject-independent,
leave-one-subject-out, and expert/novice splitting schemes.
"""

__version__ = "0.1.0"
