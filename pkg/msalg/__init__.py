# msalg: finite many-sorted algebra engine
