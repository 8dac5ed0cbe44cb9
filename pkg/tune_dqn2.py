# Scratch: refine hypers/seeds around the promising short-duration configuration.
import time
import numpy as np
from allocsim.model import (BusinessProcess, BusinessProcessSuite, EligibilityMap,
                            Task, TaskTransition, validate_suite)
from allocsim.engine import EngineConfig
from allocsim.dqn import DqnConfig, train, evaluate
from allocsim.neural import load_params

ELIG = {(0,1):1.4,(0,2):0.3,(0,4):0.6,(0,5):0.4,(0,6):1.1,(0,7):0.4,
        (1,0):0.75,(1,1):0.3,(1,3):2.7,(1,4):2.6,(1,7):0.6,
        (2,0):2.8,(2,2):2.7,(2,3):0.1,(2,5):10.5,(2,6):1.7,(2,7):2.5}
TRANS = {0:[(1,0.6),(2,0.3)], 1:[(3,0.9),(1,0.1)], 2:[(3,0.85)], 3:[],
         4:[(5,0.5),(6,0.5)], 5:[(7,0.9),(5,0.1)], 6:[(7,0.85),(6,0.15)], 7:[]}
D_SMALL = {0:8,1:6,2:10,3:6,4:4,5:12,6:9,7:5}

def build(d, trans, s_frac=0.125):
    def T(i, start=False):
        return Task(id=i, transitions=tuple(TaskTransition(j,p) for j,p in trans.get(i,[])),
                    mean_duration=float(d[i]), duration_std=float(d[i])*s_frac, is_start=start)
    p0 = BusinessProcess(id=0, frequency=1.0, reward=1.0, tasks=(T(0,True),T(1),T(2),T(3)))
    p1 = BusinessProcess(id=1, frequency=6.0, reward=1.0, tasks=(T(4,True),T(5),T(6),T(7)))
    s = BusinessProcessSuite(resources=(0,1,2), eligibility=EligibilityMap(dict(ELIG)), processes=(p0,p1))
    assert validate_suite(s).ok
    return s

def trial(name, d, cap, ap, discount, lr, seed):
    suite = build(d, TRANS)
    ecfg = EngineConfig(arrival_probability=ap, enabled_duration_cap=cap, encoding="a10", seed=seed)
    t0 = time.perf_counter()
    run = train(suite, ecfg, DqnConfig(seed=seed, discount=discount, learning_rate=lr), f"/tmp/g2_{name}_{seed}")
    dt = time.perf_counter() - t0
    best = load_params(run.best_path); last = load_params(run.last_path)
    dq = evaluate("checkpoint", suite, ecfg, 100, 400, params=best, base_seed=777)
    dl = evaluate("checkpoint", suite, ecfg, 100, 400, params=last, base_seed=777)
    ff = evaluate("fifo", suite, ecfg, 100, 400, base_seed=777)
    sp = evaluate("spt", suite, ecfg, 100, 400, base_seed=777)
    print(f"{name} seed={seed}: {dt:.0f}s | med best={np.median(dq):.1f} last={np.median(dl):.1f} "
          f"fifo={np.median(ff):.1f} spt={np.median(sp):.1f} | dqn-fifo={np.median(dq)-np.median(ff):+.1f}", flush=True)
    return np.median(dq) - np.median(ff)

for seed in (1, 2, 3):
    trial("lr5e4_d95", D_SMALL, 30, 0.5, 0.95, 5e-4, seed)
for seed in (1, 2):
    trial("lr3e4_d95", D_SMALL, 30, 0.5, 0.95, 3e-4, seed)
    trial("lr5e4_d97", D_SMALL, 30, 0.5, 0.97, 5e-4, seed)
