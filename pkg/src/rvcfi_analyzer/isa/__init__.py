"""RV64 instruction-set core: decode, hart state and the execute loop."""
