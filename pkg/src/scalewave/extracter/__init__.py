# src/scalewave/extracter/__init__.py

# Patch extraction
