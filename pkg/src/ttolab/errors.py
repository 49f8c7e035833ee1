class ToleranceError(RuntimeError):
    """A numerical invariant was violated beyond its tolerance.

    ``invariant`` names the check that failed so that drivers (the CLI in
    particular) can report it without parsing the message.
    """

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
