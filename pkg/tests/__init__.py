# qfrac tests
