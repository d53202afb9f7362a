# src/scalewave/store/__init__.py

# Artifact persistence
