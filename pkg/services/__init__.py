"""Exact ornament services: kernel, validation, the two mu methods, generators and documents."""
