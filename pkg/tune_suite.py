# Scratch tuning harness for the bundled suite (not part of the package).
import numpy as np
from allocsim.model import (BusinessProcess, BusinessProcessSuite, EligibilityMap,
                            Task, TaskTransition, validate_suite)
from allocsim.engine import Engine, EngineConfig, Assign
from allocsim.baselines import fifo_action, spt_action

ELIG = {(0,1):1.4,(0,2):0.3,(0,4):0.6,(0,5):0.4,(0,6):1.1,(0,7):0.4,
        (1,0):0.75,(1,1):0.3,(1,3):2.7,(1,4):2.6,(1,7):0.6,
        (2,0):2.8,(2,2):2.7,(2,3):0.1,(2,5):10.5,(2,6):1.7,(2,7):2.5}

def build(d, trans):
    def T(i, start=False):
        return Task(id=i, transitions=tuple(TaskTransition(j,p) for j,p in trans.get(i,[])),
                    mean_duration=float(d[i]), duration_std=float(d[i])/8.0, is_start=start)
    p0 = BusinessProcess(id=0, frequency=1.0, reward=1.0, tasks=(T(0,True),T(1),T(2),T(3)))
    p1 = BusinessProcess(id=1, frequency=6.0, reward=1.0, tasks=(T(4,True),T(5),T(6),T(7)))
    s = BusinessProcessSuite(resources=(0,1,2), eligibility=EligibilityMap(dict(ELIG)), processes=(p0,p1))
    assert validate_suite(s).ok, validate_suite(s).violations
    return s

# FIFO flow discipline + refusal of wasteful pairings (emulates a trained agent)
GOOD = {(r,t): e for (r,t), e in ELIG.items() if e < 2.0}
def smart_action(view):
    for entry in sorted(view.enabled, key=lambda e: (e.arrival_step, e.case_id)):
        options = [r for r in view.eligible_resources.get(entry.task_id, ())
                   if r in view.free_resources and (r, entry.task_id) in GOOD]
        if options:
            r = min(options, key=lambda r: GOOD[(r, entry.task_id)])
            return Assign(resource=r, task=entry.task_id)
    return None

def run(suite, policy, episodes, steps, cap, ap, seed=4242, stats=False):
    eng = Engine(suite, EngineConfig(arrival_probability=ap, enabled_duration_cap=cap, seed=0))
    seeds = np.random.SeedSequence(seed).spawn(1)[0].spawn(episodes)
    out, adm, wip, idle = [], [], [], np.zeros(3)
    for e in range(episodes):
        eng.reset(seeds[e]); tot = 0.0
        for _ in range(steps):
            view = eng.observe_privileged()
            if stats:
                for r in view.free_resources: idle[r] += 1
            a = policy(view)
            _, r = eng.step(a); tot += r
        out.append(tot); adm.append(len(eng._cases))
        wip.append(sum(1 for c in eng._cases.values() if c.status == 0))
    if stats:
        idle /= episodes * steps
        print(f"    admitted={np.mean(adm):5.1f} end_wip={np.mean(wip):4.1f} idle={np.round(idle,2)}")
    return np.asarray(out)

def score(name, d, trans, cap, ap, episodes=60, steps=400, stats=False):
    suite = build(d, trans)
    f = run(suite, fifo_action, episodes, steps, cap, ap, stats=stats)
    s = run(suite, spt_action, episodes, steps, cap, ap, stats=stats)
    g = run(suite, smart_action, episodes, steps, cap, ap, stats=stats)
    print(f"{name}: FIFO med={np.median(f):5.1f} SPT med={np.median(s):5.1f} smart med={np.median(g):5.1f} "
          f"| means {f.mean():5.2f}/{s.mean():5.2f}/{g.mean():5.2f} | f-s gap={f.mean()-s.mean():5.2f} "
          f"g-f gap={g.mean()-f.mean():5.2f}")

base_trans = {0:[(1,0.6),(2,0.3)], 1:[(3,0.9),(1,0.1)], 2:[(3,0.85)], 3:[],
              4:[(5,0.65),(6,0.35)], 5:[(7,0.95),(5,0.05)], 6:[(7,0.9),(6,0.1)], 7:[]}

# short frequent start, long completers
score("A t7 long cap120", {0:18,1:12,2:26,3:8,4:6,5:34,6:26,7:30}, base_trans, 120, 0.5)
score("A t7 long cap160", {0:18,1:12,2:26,3:8,4:6,5:34,6:26,7:30}, base_trans, 160, 0.5)
score("A t7 long cap200", {0:18,1:12,2:26,3:8,4:6,5:34,6:26,7:30}, base_trans, 200, 0.5)
score("B bigger t5 cap160", {0:18,1:12,2:26,3:8,4:6,5:48,6:30,7:30}, base_trans, 160, 0.5)
score("C ap0.7 cap160", {0:18,1:12,2:26,3:8,4:6,5:34,6:26,7:30}, base_trans, 160, 0.7)
score("D v1 orig cap90", {0:24,1:18,2:30,3:18,4:12,5:36,6:27,7:15},
      {0:[(1,0.55),(2,0.35)],1:[(1,0.15),(3,0.85)],2:[(3,0.9)],3:[],
       4:[(5,0.6),(6,0.4)],5:[(5,0.1),(7,0.9)],6:[(6,0.2),(7,0.7)],7:[]}, 90, 0.5)
print("--- detail A cap160 ---")
score("A detail", {0:18,1:12,2:26,3:8,4:6,5:34,6:26,7:30}, base_trans, 160, 0.5, stats=True)
