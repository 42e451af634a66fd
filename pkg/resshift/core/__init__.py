"""
Core engine: schedule, kernels, predictor, objective, pipeline and storage
"""
