# bounds package
