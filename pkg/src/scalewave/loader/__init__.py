# src/scalewave/loader/__init__.py

# CSV ingestion and synthetic markets
