# Test package for qutrit-nonlocality
