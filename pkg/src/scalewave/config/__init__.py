# src/scalewave/config/__init__.py

# Configuration module for scalewave
