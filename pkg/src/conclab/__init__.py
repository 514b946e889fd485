"""Second-order concentration numerics on finite product spaces."""
