"""Run configuration, serialized verbatim into every result file."""

from __future__ import annotations

from dataclasses import dataclass, asdict, fields


@dataclass
class SimConfig:
    mode: str = "practical"          # "theory" | "practical"
    b_factor: int = 4                # bandwidth = b_factor * ceil(log2 n) bits
    bandwidth_bits: int | None = None  # explicit override
    load_cap: int = 4                # routing load cap, multiples of Delta
    # loop multipliers: k1/k2 sparse phase, k3 R0 shrink, k4/k5 dense layer
    # loop, k6 shattering
    k1: int = 5
    k2: int = 4
    k3: int = 4
    k4: int = 5
    k5: int = 4
    k6: int = 4
    c_layer: float = 1.0             # layer-size floor constant
    c_p: float = 2.0                 # sub-palette size constant
    c_small: float = 1.0             # small-degree branch threshold constant
    c_theory: float = 1.0            # theory-mode Delta >= c*log^2 n assertion
    epsilon: float = 1.0 / 3.0
    eta: float = 1.0 / 324.0         # epsilon / 108
    delta_acd: float = 1.0 / 81.0    # epsilon / 27
    p_sample: float = 0.05           # slack-generation sampling probability
    # decomposition calibration (practical mode; theory mode pins all three to
    # the literal values 1.0 / 1 / 1.0 so thresholds match the analysis)
    acd_sample_mult: float = 4.0     # sampling prob = min(1, mult/sqrt(Delta))
    acd_gossip_reps: int = 8         # gossip repetitions (counts accumulate)
    acd_margin: float = 0.5          # detection thresholds = margin * expectation
    overlay_round_mult: int = 2      # paired-round cap multiplier
    instance_mult: float = 2.0       # parallel coloring instances: a*log2 n
    r_cap: int = 12                  # routing round ceiling used in audits
    max_agg_bits: int = 4096         # widest value tree_aggregate accepts
    n_max_component: int = 20000     # shattered-component size ceiling
    trace: bool = False

    def validate(self):
        if self.mode not in ("theory", "practical"):
            raise ValueError(f"unknown mode {self.mode}")
        if self.b_factor < 1:
            raise ValueError("b_factor must be >= 1")
        if not 0.0 < self.delta_acd < 1.0 / 80.0:
            raise ValueError("delta_acd must be in (0, 1/80)")
        if not 0.0 < self.p_sample < 1.0:
            raise ValueError("p_sample must be in (0,1)")
        return self

    def to_text(self) -> str:
        return "".join(
            f"{k}={v}\n" for k, v in sorted(asdict(self).items()) if v is not None
        )

    @classmethod
    def from_text(cls, text: str) -> "SimConfig":
        types = {f.name: f for f in fields(cls)}
        kwargs = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in types:
                raise ValueError(f"unknown config key {key}")
            value = value.strip()
            if key in ("mode",):
                kwargs[key] = value
            elif key in ("trace",):
                kwargs[key] = value.lower() in ("1", "true", "yes")
            elif key in (
                "b_factor", "bandwidth_bits", "load_cap", "k1", "k2", "k3",
                "k4", "k5", "k6", "overlay_round_mult", "r_cap", "max_agg_bits",
                "acd_gossip_reps", "n_max_component",
            ):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs).validate()
