# Scratch: random-search priority policies to gauge learnable headroom per suite.
import numpy as np
from allocsim.model import (BusinessProcess, BusinessProcessSuite, EligibilityMap,
                            Task, TaskTransition, validate_suite)
from allocsim.engine import Engine, EngineConfig, Assign
from allocsim.baselines import fifo_action, spt_action

ELIG = {(0,1):1.4,(0,2):0.3,(0,4):0.6,(0,5):0.4,(0,6):1.1,(0,7):0.4,
        (1,0):0.75,(1,1):0.3,(1,3):2.7,(1,4):2.6,(1,7):0.6,
        (2,0):2.8,(2,2):2.7,(2,3):0.1,(2,5):10.5,(2,6):1.7,(2,7):2.5}
PAIRS = sorted(ELIG)

def build(d, trans):
    def T(i, start=False):
        return Task(id=i, transitions=tuple(TaskTransition(j,p) for j,p in trans.get(i,[])),
                    mean_duration=float(d[i]), duration_std=float(d[i])/8.0, is_start=start)
    p0 = BusinessProcess(id=0, frequency=1.0, reward=1.0, tasks=(T(0,True),T(1),T(2),T(3)))
    p1 = BusinessProcess(id=1, frequency=6.0, reward=1.0, tasks=(T(4,True),T(5),T(6),T(7)))
    s = BusinessProcessSuite(resources=(0,1,2), eligibility=EligibilityMap(dict(ELIG)), processes=(p0,p1))
    assert validate_suite(s).ok
    return s

def weight_policy(w):
    wmap = dict(zip(PAIRS, w))
    def act(view):
        waiting = {e.task_id for e in view.enabled}
        best, bw = None, 0.0  # NoOp beats pairs with weight <= 0
        for (r, t), weight in wmap.items():
            if weight > bw and r in view.free_resources and t in waiting:
                best, bw = (r, t), weight
        return None if best is None else Assign(*best)
    return act

def run(suite, policy, episodes, steps, cap, ap, seed):
    eng = Engine(suite, EngineConfig(arrival_probability=ap, enabled_duration_cap=cap, seed=0))
    seeds = np.random.SeedSequence(seed).spawn(1)[0].spawn(episodes)
    out = []
    for e in range(episodes):
        eng.reset(seeds[e]); tot = 0.0
        for _ in range(steps):
            _, r = eng.step(policy(eng.observe_privileged()))
            tot += r
        out.append(tot)
    return np.asarray(out)

def search(name, d, trans, cap, ap, iters=260):
    suite = build(d, trans)
    f = run(suite, fifo_action, 50, 400, cap, ap, 4242)
    s = run(suite, spt_action, 50, 400, cap, ap, 4242)
    rng = np.random.default_rng(7)
    best_w, best_r = None, -1e9
    for i in range(iters):
        if best_w is None or i < iters // 2:
            w = rng.uniform(-1, 1, len(PAIRS))
            # bias: seed half the candidates with inverse-efficiency preference
            if i % 2 == 0:
                w = np.array([1.0 / ELIG[p] for p in PAIRS]) + rng.normal(0, 0.3, len(PAIRS))
        else:
            w = best_w + rng.normal(0, 0.25, len(PAIRS))
        r = run(suite, weight_policy(w), 24, 400, cap, ap, 999).mean()
        if r > best_r:
            best_w, best_r = w, r
    g = run(suite, weight_policy(best_w), 50, 400, cap, ap, 4242)
    print(f"{name}: FIFO {f.mean():5.2f}/med {np.median(f):4.1f} | SPT {s.mean():5.2f}/med {np.median(s):4.1f} "
          f"| best-found {g.mean():5.2f}/med {np.median(g):4.1f} | headroom {g.mean()-f.mean():+5.2f} fifo-spt {f.mean()-s.mean():+5.2f}")
    order = sorted(zip(PAIRS, best_w), key=lambda kv: -kv[1])
    print("   pair weights:", ["%s%+.2f" % (f"r{r}t{t}", w) for (r, t), w in order[:10]])

v1 = ({0:24,1:18,2:30,3:18,4:12,5:36,6:27,7:15},
      {0:[(1,0.55),(2,0.35)],1:[(1,0.15),(3,0.85)],2:[(3,0.9)],3:[],
       4:[(5,0.6),(6,0.4)],5:[(5,0.1),(7,0.9)],6:[(6,0.2),(7,0.7)],7:[]}, 90, 0.5)
v5 = ({0:20,1:14,2:24,3:10,4:8,5:40,6:18,7:12},
      {0:[(1,0.6),(2,0.3)],1:[(3,0.9),(1,0.1)],2:[(3,0.85)],3:[],
       4:[(5,0.5),(6,0.5)],5:[(7,0.9),(5,0.1)],6:[(7,0.85),(6,0.15)],7:[]}, 120, 0.5)

search("v1", *v1)
search("v5", *v5)
