//! `qot`: parameter calculator, simulated OT runs, attack estimates and the
//! benchmark table.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::net::{TcpListener, TcpStream};
use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qot::adversary::{run_attack, AdversaryStrategy};
use qot::channel::ChannelModel;
use qot::ot::{alice, bob, run_ot, Carrier, Choice, OtParams, RunSeeds};
use qot::secparams::{bench_abkk23, bench_all, bench_bckm21, bench_ours, render_table, DEFAULT_Q_RO, LAMBDA_EQ};
use qot::transport::{Side, TcpLink, Wire};
use qot::{BitString, Error, Seed};

#[derive(Parser)]
#[command(name = "qot", version, about = "Oblivious transfer from BB84 states: parameters, simulation and attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize parameters for a target trace distance.
    CalcParams(CalcParams),
    /// Run one party of a simulated OT over TCP.
    Run(Run),
    /// Run honest OT sessions in-process and report success statistics.
    Loopback(Loopback),
    /// Estimate how often a cheating party goes undetected.
    Attack(Attack),
    /// Reproduce the benchmark table.
    Bench(Bench),
}

fn parse_seed(s: &str) -> Result<Seed, String> {
    Seed::parse(s).ok_or_else(|| format!("seed must be a decimal u64 or 64 hex digits, got {s:?}"))
}

#[derive(Args)]
struct SeedArg {
    /// Master seed; fresh entropy when unset.
    #[arg(long, env = "QOT_SEED", value_parser = parse_seed)]
    seed: Option<Seed>,
}

impl SeedArg {
    fn get(&self) -> Seed {
        self.seed.unwrap_or_else(Seed::fresh)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct CalcParams {
    #[arg(long, default_value_t = 1e-15)]
    target_delta: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    vartheta: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Simulation sizes shared by `run` and `loopback`.
#[derive(Args, Clone, Copy)]
struct Sim {
    /// Acknowledge that simulated runs use insecure toy sizes.
    #[arg(long)]
    toy: bool,
    #[arg(long, default_value_t = 4096)]
    lambda_ot: usize,
    /// Bit-flip probability of the channel, also assumed by the checks.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    #[arg(long, default_value_t = 0.0)]
    vartheta: f64,
    /// Seed of the simulated channel, shared by both parties.
    #[arg(long, default_value = "0", value_parser = parse_seed)]
    channel_seed: Seed,
}

impl Sim {
    fn setup(&self) -> Result<(OtParams, ChannelModel), Error> {
        if !self.toy {
            return Err(Error::Domain("simulated runs use insecure toy sizes; pass --toy to acknowledge".into()));
        }
        let params = OtParams::toy(self.lambda_ot, self.alpha);
        params.validate()?;
        Ok((params, ChannelModel::new(self.alpha, self.loss, self.vartheta, self.channel_seed)?))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Alice,
    Bob,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("endpoint").required(true).args(["listen", "connect"])))]
struct Run {
    #[arg(long, value_enum)]
    role: Role,
    /// Accept connections on this address.
    #[arg(long)]
    listen: Option<String>,
    /// Connect to this address.
    #[arg(long)]
    connect: Option<String>,
    /// Connections to serve when listening.
    #[arg(long, default_value_t = 1)]
    sessions: usize,
    /// Alice's messages as hex; random when unset.
    #[arg(long)]
    m0: Option<String>,
    #[arg(long)]
    m1: Option<String>,
    /// Bob's choice bit.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    choice: u8,
    #[command(flatten)]
    sim: Sim,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct Loopback {
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Carry frames over a localhost socket instead of channels.
    #[arg(long)]
    tcp: bool,
    #[command(flatten)]
    sim: Sim,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    EquivocateEq,
    FakeSeedFamily,
    SkipMeasurement,
}

#[derive(Args)]
struct Attack {
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// Equivocating instances for `equivocate-eq`.
    #[arg(long, default_value_t = 1)]
    t: usize,
    /// Fake families for `fake-seed-family`.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Skipped fraction for `skip-measurement`.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Bckm21,
    Abkk23Three,
    Abkk23Four,
    OursIdeal,
    OursNoisy,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("which").required(true).args(["all", "protocol"])))]
struct Bench {
    /// All five columns.
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum)]
    protocol: Option<Protocol>,
    #[arg(long, default_value_t = 1e-15)]
    target_delta: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &impl serde::Serialize) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("output serializes")));
}

fn calc_params(c: &CalcParams) -> Result<(), Error> {
    let row = bench_ours(c.target_delta, c.alpha, c.vartheta)?;
    match c.format {
        Format::Json => print_json(&row),
        Format::Table => emit(&render_table(&[row])),
    }
    Ok(())
}

fn message(hex_arg: &Option<String>, len: usize, rng: &mut qot::Rng) -> Result<BitString, Error> {
    match hex_arg {
        None => Ok(BitString::random(len, rng)),
        Some(h) => {
            let bytes = hex::decode(h).map_err(|e| Error::Domain(format!("message {h:?}: {e}")))?;
            BitString::from_bytes(&bytes, len).ok_or_else(|| {
                Error::Domain(format!("messages must be {} hex digits", len.div_ceil(8) * 2))
            })
        }
    }
}

fn status(result: &Result<Value, Error>) -> Value {
    match result {
        Ok(v) => v.clone(),
        Err(e) => json!({ "status": "error", "stage": e.abort_stage().map(|s| s.name()), "error": e.to_string() }),
    }
}

fn serve(r: &Run, stream: TcpStream, seed: Seed, params: &OtParams, model: &ChannelModel) -> Result<Value, Error> {
    let side = match r.role {
        Role::Alice => Side::Initiator,
        Role::Bob => Side::Responder,
    };
    let mut wire = Wire::new(Box::new(TcpLink::new(stream)?), side);
    let mut rng = seed.rng();
    match r.role {
        Role::Alice => {
            let len = params.message_len;
            let m = [message(&r.m0, len, &mut rng)?, message(&r.m1, len, &mut rng)?];
            let out = alice(&mut wire, params, model, &[m.clone()], &mut rng)?;
            Ok(json!({
                "role": "alice",
                "status": "ok",
                "m0": hex::encode(m[0].to_bytes()),
                "m1": hex::encode(m[1].to_bytes()),
                "transcript": hex::encode(out.transcript),
            }))
        }
        Role::Bob => {
            let out = bob(&mut wire, params, model, &Choice::Single(r.choice == 1), &mut rng)?;
            let d = out.single();
            Ok(json!({
                "role": "bob",
                "status": "ok",
                "b": d.b as u8,
                "message": hex::encode(d.message.to_bytes()),
                "decoded": d.decoded,
                "transcript": hex::encode(out.transcript),
            }))
        }
    }
}

fn run(r: &Run) -> Result<(), Error> {
    let (params, model) = r.sim.setup()?;
    let seed = r.seed.get();
    let io = |e: std::io::Error| Error::from(qot::TransportError::from(e));
    if let Some(addr) = &r.connect {
        let stream = TcpStream::connect(addr).map_err(io)?;
        let result = serve(r, stream, seed, &params, &model);
        print_json(&status(&result));
        return result.map(|_| ());
    }
    let listener = TcpListener::bind(r.listen.as_deref().expect("endpoint group is required")).map_err(io)?;
    eprintln!("listening on {}", listener.local_addr().map_err(io)?);
    let mut failed = false;
    thread::scope(|scope| -> Result<(), Error> {
        let mut handles = Vec::new();
        for i in 0..r.sessions {
            let (stream, _) = listener.accept().map_err(io)?;
            let session_seed = seed.derive_indexed("session", i as u64);
            let (params, model) = (&params, &model);
            handles.push(scope.spawn(move || (i, serve(r, stream, session_seed, params, model))));
        }
        for h in handles {
            let (i, result) = h.join().expect("session thread panicked");
            failed |= result.is_err();
            let mut v = status(&result);
            v["session"] = json!(i);
            emit(&format!("{}\n", serde_json::to_string(&v).expect("output serializes")));
        }
        Ok(())
    })?;
    if failed {
        return Err(Error::Domain("at least one session failed".into()));
    }
    Ok(())
}

fn loopback(l: &Loopback) -> Result<(), Error> {
    let (params, model) = l.sim.setup()?;
    let seed = l.seed.get();
    let carrier = if l.tcp { Carrier::Tcp } else { Carrier::Loopback };
    let start = Instant::now();
    let (mut delivered, mut decode_failures) = (0u64, 0u64);
    let mut aborts: BTreeMap<String, u64> = BTreeMap::new();
    for i in 0..l.trials {
        let trial = seed.derive_indexed("trial", i);
        let mut rng = trial.rng_for("inputs");
        let m = [BitString::random(params.message_len, &mut rng), BitString::random(params.message_len, &mut rng)];
        let b = rand_bit(&mut rng);
        let model = ChannelModel { rng_seed: trial.derive("channel"), ..model };
        let r = run_ot(vec![m], Choice::Single(b), &params, &model, RunSeeds::from_master(trial), carrier)?;
        if r.delivered() {
            delivered += 1;
        } else if let Some(stage) = r.abort_stage() {
            *aborts.entry(stage.name().into()).or_default() += 1;
        } else if r.bob.as_ref().is_ok_and(|b| !b.single().decoded) {
            decode_failures += 1;
        } else {
            *aborts.entry("wrong-message".into()).or_default() += 1;
        }
    }
    print_json(&json!({
        "trials": l.trials,
        "delivered": delivered,
        "success_rate": delivered as f64 / l.trials.max(1) as f64,
        "decode_failures": decode_failures,
        "aborts": aborts,
        "lambda_ot": params.lambda_ot,
        "alpha": params.alpha,
        "seed": seed.to_hex(),
        "elapsed_seconds": start.elapsed().as_secs_f64(),
    }));
    Ok(())
}

fn rand_bit(rng: &mut qot::Rng) -> bool {
    BitString::random(1, rng).get(0)
}

fn attack(a: &Attack) -> Result<(), Error> {
    let strategy = match a.strategy {
        Strategy::EquivocateEq => AdversaryStrategy::EquivocateEq { t: a.t },
        Strategy::FakeSeedFamily => AdversaryStrategy::FakeSeedFamily { count: a.count },
        Strategy::SkipMeasurement => AdversaryStrategy::SkipMeasurementOn { fraction: a.fraction },
    };
    let report = run_attack(&strategy, a.trials, a.seed.get())?;
    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["success_rate"] = json!(report.success.rate());
    v["interval_3sigma"] = json!(report.success.interval(3.0));
    v["within_3sigma"] = json!(report.within_3sigma());
    print_json(&v);
    Ok(())
}

fn bench(b: &Bench) -> Result<(), Error> {
    let t = b.target_delta;
    let rows = match (b.all, b.protocol) {
        (true, _) => bench_all(t)?,
        (_, Some(Protocol::Bckm21)) => vec![bench_bckm21(t, LAMBDA_EQ)?],
        (_, Some(Protocol::Abkk23Three)) => vec![bench_abkk23(t, DEFAULT_Q_RO, 3)?],
        (_, Some(Protocol::Abkk23Four)) => vec![bench_abkk23(t, DEFAULT_Q_RO, 4)?],
        (_, Some(Protocol::OursIdeal)) => vec![bench_ours(t, 0.0, 0.0)?],
        (_, Some(Protocol::OursNoisy)) => vec![bench_ours(t, 0.006, 0.001)?],
        (false, None) => unreachable!("clap requires --all or --protocol"),
    };
    match b.format {
        Format::Json => print_json(&rows),
        Format::Table => emit(&render_table(&rows)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::CalcParams(c) => calc_params(c),
        Command::Run(r) => run(r),
        Command::Loopback(l) => loopback(l),
        Command::Attack(a) => attack(a),
        Command::Bench(b) => bench(b),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
