# simulator package
