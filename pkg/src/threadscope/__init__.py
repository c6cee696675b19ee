"""Threadscope: build corpora from post/comment dumps, clean the text, train
and apply a BILOU named-entity tagger, fit online variational LDA topics,
score lexicon sentiment, and export the aggregate report tables."""

__version__ = "0.1.0"
