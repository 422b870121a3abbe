# stationary package
