"""Sparse binary kernel logistic regression trained by SMO decomposition."""
