"""Random well-typed expressions over the hotel model, for fuzzing."""

import random

CLASSES = ("Hotel", "Room", "Bathroom", "Guest")

INT_ATTRS = {"Room": ("floorNumber", "numberOfBeds"), "Bathroom": ("floorNumber", "usage"), "Guest": ("age",)}
STR_ATTRS = {"Guest": ("name",)}
# single-valued roles: class -> [(role, target)]
ONE = {
    "Room": [("hotel", "Hotel"), ("bathroom", "Bathroom")],
    "Bathroom": [("hotel", "Hotel"), ("room", "Room")],
    "Guest": [("hotel", "Hotel"), ("room", "Room")],
    "Hotel": [],
}
MANY = {
    "Hotel": [("rooms", "Room"), ("guests", "Guest"), ("bathrooms", "Bathroom")],
    "Room": [("guests", "Guest")],
    "Bathroom": [],
    "Guest": [],
}


class Gen:
    def __init__(self, seed: int, max_depth: int = 4):
        self.r = random.Random(seed)
        self.max_depth = max_depth
        self.fresh = 0

    def expression(self, self_class: str = "Room") -> tuple[str, str]:
        kind = self.r.choice(["Boolean", "Integer", "Real", "String", "obj", "set"])
        env = {"self": self_class}
        if kind == "obj":
            return self.obj(self.r.choice(CLASSES), env, 0), kind
        if kind == "set":
            return self.set(self.r.choice(CLASSES), env, 0), kind
        return getattr(self, kind.lower())(env, 0), kind

    def var(self):
        self.fresh += 1
        return f"v{self.fresh}"

    def leaf(self, d):
        return d >= self.max_depth or self.r.random() < 0.25

    def vars_of(self, env, cls):
        return [n for n, c in env.items() if c == cls]

    # -- scalars ---------------------------------------------------------------

    def boolean(self, env, d):
        r = self.r
        if self.leaf(d):
            return r.choice(["true", "false", "1 / 0 > 1"])
        k = r.randrange(11)
        if k == 0:
            return f"not ({self.boolean(env, d + 1)})"
        if k == 1:
            op = r.choice(["and", "or", "xor", "implies"])
            return f"({self.boolean(env, d + 1)}) {op} ({self.boolean(env, d + 1)})"
        if k == 2:
            op = r.choice(["<", "<=", ">", ">=", "=", "<>", "=="])
            return f"{self.integer(env, d + 1)} {op} {self.integer(env, d + 1)}"
        if k == 3:
            cls = r.choice(CLASSES)
            return f"{self.obj(cls, env, d + 1)} = {self.obj(cls, env, d + 1)}"
        if k == 4:
            cls = r.choice(CLASSES)
            op = r.choice(["isEmpty", "notEmpty"])
            return f"{self.set(cls, env, d + 1)}->{op}"
        if k == 5:
            cls = r.choice(CLASSES)
            op = r.choice(["includes", "excludes"])
            return f"{self.set(cls, env, d + 1)}->{op}({self.obj(cls, env, d + 1)})"
        if k == 6:
            cls = r.choice(CLASSES)
            op = r.choice(["exists", "forAll", "one"])
            v = self.var()
            body = self.boolean({**env, v: cls}, d + 1)
            return f"{self.set(cls, env, d + 1)}->{op}({v} : {cls} | {body})"
        if k == 7:
            cls = r.choice(CLASSES)
            v = self.var()
            return f"{self.set(cls, env, d + 1)}->isUnique({v} | {self.integer({**env, v: cls}, d + 1)})"
        if k == 8:
            return (f"if {self.boolean(env, d + 1)} then {self.boolean(env, d + 1)} "
                    f"else {self.boolean(env, d + 1)} endif")
        if k == 9:
            cls = r.choice(CLASSES)
            op = r.choice(["oclIsKindOf", "oclIsTypeOf"])
            return f"{self.obj(cls, env, d + 1)}.{op}({r.choice(CLASSES)})"
        return f"{self.string(env, d + 1)} = {self.string(env, d + 1)}"

    def integer(self, env, d):
        r = self.r
        if self.leaf(d):
            owners = [(n, c) for n, c in env.items() if c in INT_ATTRS]
            if owners and r.random() < 0.6:
                n, c = r.choice(owners)
                return f"{n}.{r.choice(INT_ATTRS[c])}"
            return str(r.randrange(-3, 10))
        k = r.randrange(8)
        if k == 0:
            op = r.choice(["+", "-", "*"])
            return f"({self.integer(env, d + 1)} {op} {self.integer(env, d + 1)})"
        if k == 1:
            op = r.choice(["div", "mod", "max", "min"])
            return f"{self.integer(env, d + 1)}.{op}({self.integer(env, d + 1)})"
        if k == 2:
            return f"{self.set(r.choice(CLASSES), env, d + 1)}->size"
        if k == 3:
            cls = r.choice(list(INT_ATTRS))
            v = self.var()
            return f"{self.set(cls, env, d + 1)}->collect({v} | {v}.{r.choice(INT_ATTRS[cls])})->sum"
        if k == 4:
            return f"({self.integer(env, d + 1)}).abs"
        if k == 5:
            return (f"if {self.boolean(env, d + 1)} then {self.integer(env, d + 1)} "
                    f"else {self.integer(env, d + 1)} endif")
        if k == 6:
            cls = r.choice(list(INT_ATTRS))
            return f"{self.obj(cls, env, d + 1)}.{r.choice(INT_ATTRS[cls])}"
        return f"{self.string(env, d + 1)}.size"

    def real(self, env, d):
        r = self.r
        if self.leaf(d):
            return r.choice(["0.5", "2.25", "-1.0", self.integer(env, d)])
        k = r.randrange(4)
        if k == 0:
            return f"({self.integer(env, d + 1)} / {self.integer(env, d + 1)})"
        if k == 1:
            return f"({self.real(env, d + 1)} {r.choice(['+', '-', '*'])} {self.real(env, d + 1)})"
        if k == 2:
            return f"({self.real(env, d + 1)}).{r.choice(['abs', 'floor', 'round'])}"
        return f"if {self.boolean(env, d + 1)} then {self.real(env, d + 1)} else {self.integer(env, d + 1)} endif"

    def string(self, env, d):
        r = self.r
        if self.leaf(d):
            return r.choice(["'a'", "''", "'Ann'"])
        k = r.randrange(4)
        if k == 0:
            return f"{self.obj('Guest', env, d + 1)}.name"
        if k == 1:
            return f"{self.string(env, d + 1)}.concat({self.string(env, d + 1)})"
        if k == 2:
            return f"{self.string(env, d + 1)}.{r.choice(['toUpper', 'toLower'])}"
        return f"if {self.boolean(env, d + 1)} then {self.string(env, d + 1)} else {self.string(env, d + 1)} endif"

    # -- objects and sets ------------------------------------------------------

    def obj(self, cls, env, d):
        r = self.r
        own = self.vars_of(env, cls)
        sources = [(c, role) for c, roles in ONE.items() for role, t in roles if t == cls]
        if self.leaf(d) or not sources:
            if own:
                return r.choice(own)
            if sources and d < self.max_depth + 2:
                c, role = r.choice(sources)
                return f"{self.obj(c, env, d + 1)}.{role}"
            return f"{cls}.allInstances->any(true)"
        k = r.randrange(3)
        if k == 0:
            c, role = r.choice(sources)
            return f"{self.obj(c, env, d + 1)}.{role}"
        if k == 1:
            v = self.var()
            return f"{self.set(cls, env, d + 1)}->any({v} : {cls} | {self.boolean({**env, v: cls}, d + 1)})"
        return f"if {self.boolean(env, d + 1)} then {self.obj(cls, env, d + 1)} else {self.obj(cls, env, d + 1)} endif"

    def set(self, cls, env, d):
        r = self.r
        sources = [(c, role) for c, roles in MANY.items() for role, t in roles if t == cls]
        if self.leaf(d):
            if sources and r.random() < 0.6:
                c, role = r.choice(sources)
                return f"{self.obj(c, env, d + 1)}.{role}"
            return f"{cls}.allInstances"
        k = r.randrange(5)
        if k == 0:
            op = r.choice(["select", "reject"])
            v = self.var()
            return f"{self.set(cls, env, d + 1)}->{op}({v} : {cls} | {self.boolean({**env, v: cls}, d + 1)})"
        if k == 1:
            op = r.choice(["union", "intersection"])
            return f"{self.set(cls, env, d + 1)}->{op}({self.set(cls, env, d + 1)})"
        if k == 2:
            op = r.choice(["including", "excluding"])
            return f"{self.set(cls, env, d + 1)}->{op}({self.obj(cls, env, d + 1)})"
        if k == 3 and sources:
            c, role = r.choice(sources)
            return f"{self.set(c, env, d + 1)}->collect({role})->asSet"
        return f"{cls}.allInstances"
