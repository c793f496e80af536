"""Discrete-event mesh simulator."""
from chainreduce.sim.broadcast import BroadcastLog, Hop, binomial_children, broadcast_global, forwarding_order
from chainreduce.sim.busy import BusyProcess
from chainreduce.sim.config import FaultSpec, RunConfig, SimConfig, load_config, load_fault_script
from chainreduce.sim.engine import MeshSim, SchedulingError, pretrained_agent, run_experiment, run_seeds
from chainreduce.sim.events import EventQueue, SimEvent
from chainreduce.sim.trace import Checkpoint, IterationRecord, SimTrace
