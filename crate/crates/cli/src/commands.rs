use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use dpn_core::baseline::BaselineConfig;
use dpn_core::checkpoint;
use dpn_core::config::{Configurable, KeyValues};
use dpn_core::corpus::{generate_corpus, DialogueCorpus, Split};
use dpn_core::db::{generate_database, VenueDatabase};
use dpn_core::dialogue::DialogueEnv;
use dpn_core::eval::{emit_curve, eval_f1, eval_success, write_success_table, CurveRecord};
use dpn_core::live::LiveDialogue;
use dpn_core::nlg::GREETING;
use dpn_core::rl::{replay_train, rl_train, RlConfig};
use dpn_core::sim::{ErrorModel, UserConfig};
use dpn_core::sl::{train_sl, write_metrics, SlConfig};
use dpn_core::{Ontology, PolicyNetwork};
use dpn_service::{consistent_dialogues, AppState, LogSink, Logs, Model, ServiceConfig};

use crate::{Chat, Cli, CliError, Command, Eval, EvalF1, GenCorpus, GenDb, Serve, TrainHuman, TrainRl, TrainSl};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    if cli.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let ontology = match &cli.ontology {
        Some(p) => Ontology::load(p)?,
        None => Ontology::default(),
    };
    let ctx = Ctx {
        ontology: Arc::new(ontology),
        workers: cli.workers,
    };
    match cli.command {
        Command::GenDb(a) => ctx.gen_db(a),
        Command::GenCorpus(a) => ctx.gen_corpus(a),
        Command::TrainSl(a) => ctx.train_sl(a),
        Command::TrainRl(a) => ctx.train_rl(a),
        Command::TrainHuman(a) => ctx.train_human(a),
        Command::Eval(a) => ctx.eval(a),
        Command::EvalF1(a) => ctx.eval_f1(a),
        Command::Serve(a) => ctx.serve(a),
        Command::Chat(a) => ctx.chat(a),
    }
}

struct Ctx {
    ontology: Arc<Ontology>,
    workers: Option<usize>,
}

/// Applies the config file, if any, on top of the defaults in `targets`.
fn configure(path: Option<&PathBuf>, targets: &mut [&mut dyn Configurable]) -> Result<()> {
    if let Some(p) = path {
        let kv = KeyValues::load(p)?;
        kv.apply(targets)
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(dpn_core::Error::from)?))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(dpn_core::Error::from)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<PolicyNetwork> {
    Ok(checkpoint::load(path)?.network)
}

impl Ctx {
    fn db(&self, path: &Path) -> Result<Arc<VenueDatabase>> {
        Ok(Arc::new(VenueDatabase::load(&self.ontology, path)?))
    }

    fn env(&self, db: &Path, errors: ErrorModel, user: UserConfig) -> Result<DialogueEnv> {
        errors.validate()?;
        user.validate()?;
        Ok(DialogueEnv::new(self.ontology.clone(), self.db(db)?, errors)?.with_user_config(user))
    }

    fn gen_db(&self, a: GenDb) -> Result<()> {
        let db = generate_database(&self.ontology, a.seed, a.n)?;
        db.save(&a.out)?;
        log::info!("wrote {} venues to {}", db.len(), a.out.display());
        Ok(())
    }

    fn gen_corpus(&self, a: GenCorpus) -> Result<()> {
        let mut errors = ErrorModel::new(0.1);
        let mut user = UserConfig::default();
        let mut baseline = BaselineConfig::default();
        configure(a.config.as_ref(), &mut [&mut errors, &mut user, &mut baseline])?;
        if let Some(ser) = a.ser {
            errors.ser = ser;
        }
        let env = self.env(&a.db, errors, user)?;
        let corpus = generate_corpus(&env, a.n, a.seed, &baseline, self.workers())?;
        corpus.save(&a.out)?;
        let ok = corpus.dialogues.iter().filter(|d| d.success).count();
        log::info!(
            "wrote {} dialogues ({} turns, {ok} successful) to {}",
            corpus.dialogues.len(),
            corpus.n_turns(),
            a.out.display()
        );
        Ok(())
    }

    fn train_sl(&self, a: TrainSl) -> Result<()> {
        let mut cfg = SlConfig::default();
        configure(a.config.as_ref(), &mut [&mut cfg])?;
        if let Some(v) = a.seed {
            cfg.seed = v;
        }
        if let Some(v) = a.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = a.max_epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = a.patience {
            cfg.patience = v;
        }
        cfg.validate()?;
        let corpus = DialogueCorpus::load(&a.corpus)?;
        let (net, history) = train_sl(&corpus, &cfg, PolicyNetwork::init_default(cfg.seed))?;
        checkpoint::save(&a.out_model, &net, cfg.seed)?;
        let mut w = create(&a.metrics)?;
        write_metrics(&history, &mut w)?;
        finish(w)?;
        if let Some(best) = history.epochs.iter().find(|e| e.epoch == history.best_epoch) {
            log::info!(
                "best epoch {} of {}: valid loss {:.4}, F1 dia_act {:.4} query {:.4} offer {:.4}",
                best.epoch,
                history.epochs.len(),
                best.valid_loss,
                best.valid_f1.dia_act,
                best.valid_f1.query,
                best.valid_f1.offer
            );
        }
        Ok(())
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    /// The flag wins over the file's `workers` key.
    fn apply_workers(&self, cfg: &mut RlConfig) {
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
    }

    fn train_rl(&self, a: TrainRl) -> Result<()> {
        let mut errors = ErrorModel::new(0.0);
        let mut user = UserConfig::default();
        let mut cfg = RlConfig::default();
        configure(a.config.as_ref(), &mut [&mut cfg, &mut errors, &mut user])?;
        self.apply_workers(&mut cfg);
        if let Some(v) = a.ser {
            errors.ser = v;
        }
        if let Some(v) = a.dialogues {
            cfg.total_dialogues = v;
        }
        if let Some(v) = a.seed {
            cfg.seed = v;
        }
        if let Some(v) = &a.algorithm {
            cfg.algorithm = v.parse()?;
        }
        cfg.validate()?;
        let env = self.env(&a.db, errors, user)?;
        let net = load_model(&a.model)?;
        let (net, checkpoints) = rl_train(&env, net, &cfg)?;
        checkpoint::save(&a.out_model, &net, cfg.seed)?;
        let curve: Vec<CurveRecord> = checkpoints
            .iter()
            .map(|c| CurveRecord::from_checkpoint(env.ser(), c))
            .collect();
        let plot = a.plot.clone().unwrap_or_else(|| a.curve.with_extension("dat"));
        emit_curve(&curve, &a.curve, &plot)?;
        if let (Some(first), Some(last)) = (curve.first(), curve.last()) {
            log::info!(
                "success {:.3} -> {:.3} over {} dialogues at ser {}",
                first.success_rate,
                last.success_rate,
                last.dialogues,
                env.ser()
            );
        }
        Ok(())
    }

    fn train_human(&self, a: TrainHuman) -> Result<()> {
        let mut cfg = RlConfig::default();
        configure(a.config.as_ref(), &mut [&mut cfg])?;
        self.apply_workers(&mut cfg);
        if let Some(v) = a.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        let db = self.db(&a.db)?;
        let logs = Logs::load(&a.logs)?;
        let episodes = consistent_dialogues(&self.ontology, &db, &logs);
        log::info!(
            "{} consistent dialogues out of {} ratings",
            episodes.len(),
            logs.ratings.len()
        );
        if episodes.len() < cfg.minibatch.min(2) {
            return Err(dpn_core::Error::Data("not enough consistent dialogues to train on".into()).into());
        }
        let net = replay_train(episodes, load_model(&a.model)?, &cfg, a.updates)?;
        checkpoint::save(&a.out_model, &net, cfg.seed)?;
        Ok(())
    }

    fn eval(&self, a: Eval) -> Result<()> {
        let mut errors = ErrorModel::new(0.0);
        let mut user = UserConfig::default();
        configure(a.config.as_ref(), &mut [&mut errors, &mut user])?;
        if a.ser_list.is_empty() {
            return Err(CliError::Usage("--ser-list is empty".into()));
        }
        let env = self.env(&a.db, errors, user)?;
        let net = load_model(&a.model)?;
        let rows = eval_success(&env, &net, &a.ser_list, a.n, a.seed, self.workers())?;
        write_success_table(&rows, io::stdout().lock())?;
        if let Some(out) = &a.out {
            let mut w = create(out)?;
            write_success_table(&rows, &mut w)?;
            finish(w)?;
        }
        Ok(())
    }

    fn eval_f1(&self, a: EvalF1) -> Result<()> {
        let split: Split = a.split.parse()?;
        let corpus = DialogueCorpus::load(&a.corpus)?;
        let f1 = eval_f1(&load_model(&a.model)?, &corpus, split)?;
        println!("split,f1_dia_act,f1_query,f1_offer");
        println!("{},{},{},{}", a.split, f1.dia_act, f1.query, f1.offer);
        Ok(())
    }

    fn serve(&self, a: Serve) -> Result<()> {
        let model = Arc::new(Model {
            ontology: (*self.ontology).clone(),
            db: (*self.db(&a.db)?).clone(),
            net: load_model(&a.model)?,
        });
        let addr: SocketAddr = format!("{}:{}", a.host, a.port)
            .parse()
            .map_err(|e| CliError::Usage(format!("bad address: {e}")))?;
        let config = ServiceConfig {
            capacity: a.capacity,
            rating_token: a.rating_token.filter(|t| !t.is_empty()),
            static_dir: a.static_dir,
            ..ServiceConfig::default()
        };
        let state = AppState::new(model, config, LogSink::open(&a.log)?);
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(self.workers())
            .enable_all()
            .build()
            .map_err(dpn_core::Error::from)?;
        rt.block_on(dpn_service::serve(addr, state)).map_err(dpn_core::Error::from)?;
        Ok(())
    }

    fn chat(&self, a: Chat) -> Result<()> {
        let db = self.db(&a.db)?;
        let net = load_model(&a.model)?;
        let mut dialogue = LiveDialogue::new(&self.ontology);
        let mut out = io::stdout().lock();
        let io_err = dpn_core::Error::from;
        writeln!(out, "system: {GREETING}").map_err(io_err)?;
        for line in io::stdin().lock().lines() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let turn = dialogue.step(&self.ontology, &db, &net, &line)?;
            writeln!(out, "system: {}", turn.system_text).map_err(io_err)?;
            if turn.closed {
                break;
            }
        }
        Ok(())
    }
}
