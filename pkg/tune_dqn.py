# Scratch: can full-length training beat FIFO under different suite scales / hypers?
import sys, time
import numpy as np
from allocsim.model import (BusinessProcess, BusinessProcessSuite, EligibilityMap,
                            Task, TaskTransition, validate_suite)
from allocsim.engine import Engine, EngineConfig
from allocsim.baselines import fifo_action, spt_action
from allocsim.dqn import DqnConfig, train, evaluate
from allocsim.neural import load_params

ELIG = {(0,1):1.4,(0,2):0.3,(0,4):0.6,(0,5):0.4,(0,6):1.1,(0,7):0.4,
        (1,0):0.75,(1,1):0.3,(1,3):2.7,(1,4):2.6,(1,7):0.6,
        (2,0):2.8,(2,2):2.7,(2,3):0.1,(2,5):10.5,(2,6):1.7,(2,7):2.5}

def build(d, trans, s_frac=0.125):
    def T(i, start=False):
        return Task(id=i, transitions=tuple(TaskTransition(j,p) for j,p in trans.get(i,[])),
                    mean_duration=float(d[i]), duration_std=float(d[i])*s_frac, is_start=start)
    p0 = BusinessProcess(id=0, frequency=1.0, reward=1.0, tasks=(T(0,True),T(1),T(2),T(3)))
    p1 = BusinessProcess(id=1, frequency=6.0, reward=1.0, tasks=(T(4,True),T(5),T(6),T(7)))
    s = BusinessProcessSuite(resources=(0,1,2), eligibility=EligibilityMap(dict(ELIG)), processes=(p0,p1))
    assert validate_suite(s).ok
    return s

TRANS = {0:[(1,0.6),(2,0.3)], 1:[(3,0.9),(1,0.1)], 2:[(3,0.85)], 3:[],
         4:[(5,0.5),(6,0.5)], 5:[(7,0.9),(5,0.1)], 6:[(7,0.85),(6,0.15)], 7:[]}
D_SMALL = {0:8,1:6,2:10,3:6,4:4,5:12,6:9,7:5}
D_ORIG  = {0:24,1:18,2:30,3:18,4:12,5:36,6:27,7:15}

def trial(name, d, cap, ap, discount, lr, seed=11):
    suite = build(d, TRANS)
    ecfg = EngineConfig(arrival_probability=ap, enabled_duration_cap=cap, encoding="a10", seed=seed)
    t0 = time.perf_counter()
    run = train(suite, ecfg, DqnConfig(seed=seed, discount=discount, learning_rate=lr), f"/tmp/grid_{name}")
    dt = time.perf_counter() - t0
    rw = run.episode_rewards
    params = load_params(run.best_path)
    dq = evaluate("checkpoint", suite, ecfg, 100, 400, params=params, base_seed=777)
    ff = evaluate("fifo", suite, ecfg, 100, 400, base_seed=777)
    sp = evaluate("spt", suite, ecfg, 100, 400, base_seed=777)
    print(f"{name}: {dt:.0f}s train(best={max(rw):.0f}, last50={np.mean(rw[-50:]):.1f}) | "
          f"eval med dqn={np.median(dq):.1f} fifo={np.median(ff):.1f} spt={np.median(sp):.1f} | "
          f"means {np.mean(dq):.1f}/{np.mean(ff):.1f}/{np.mean(sp):.1f}", flush=True)

trial("small_d99", D_SMALL, 30, 0.5, 0.99, 1e-3)
trial("small_d95", D_SMALL, 30, 0.5, 0.95, 1e-3)
trial("small_d95_lr5e4", D_SMALL, 30, 0.5, 0.95, 5e-4)
trial("orig_d95", D_ORIG, 90, 0.5, 0.95, 1e-3)
