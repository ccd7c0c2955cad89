"""Silver layer transformations."""
