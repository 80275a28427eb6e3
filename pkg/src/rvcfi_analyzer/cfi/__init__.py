"""Control-flow integrity units: shadow stack and landing pads."""
