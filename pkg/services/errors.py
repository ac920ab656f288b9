class MultiGaussError(ValueError):
    """Base class for every failure raised by the services"""


class DomainError(MultiGaussError):
    pass


class NotAUnit(MultiGaussError):
    def __init__(self, value: int, modulus: int):
        super().__init__(f"{value} is not a unit modulo {modulus}")
        self.value = value
        self.modulus = modulus


class ModulusError(MultiGaussError):
    pass


class CapacityExceeded(MultiGaussError):
    def __init__(self, what: str, required: int, cap: int):
        super().__init__(f"{what} needs a budget of {required}, cap is {cap}")
        self.what = what
        self.required = required
        self.cap = cap


class HomogeneityError(MultiGaussError):
    def __init__(self, form_index: int, degrees):
        super().__init__(f"Form {form_index} is not homogeneous (term degrees {sorted(degrees)})")
        self.form_index = form_index


class FormSyntaxError(MultiGaussError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position
