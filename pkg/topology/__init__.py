# topology package
