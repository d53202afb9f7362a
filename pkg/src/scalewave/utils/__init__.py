# src/scalewave/utils/__init__.py
