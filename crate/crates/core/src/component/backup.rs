use super::{choose_next_manager, Action, ComponentState, Role, TAIA_B_SUBID};
use crate::protocol::{Message, MessageType};
use crate::tom::TimeoutKind;

impl ComponentState {
    pub(super) fn backup_handle(&mut self, m: &Message, out: &mut Vec<Action>) {
        let subject = self.valid_node(m);
        match m.ty {
            MessageType::IA_FLAG_TIMEOUT => out.push(Action::ClearIaFlag),
            MessageType::TAIA_TIMEOUT_B => {
                self.send(
                    out,
                    self.managerid,
                    Message::new(MessageType::TAIA, self.me),
                );
            }
            MessageType::DB if subject == Some(self.me) => {
                self.apply_db(m, out);
                self.broadcast_db(m, out);
                self.renew(out, TimeoutKind::TaiaB, TAIA_B_SUBID);
            }
            MessageType::DB => {
                self.apply_db(m, out);
                if subject == Some(self.managerid) {
                    self.renew(out, TimeoutKind::MiaB, self.managerid);
                }
            }
            MessageType::MIA => {
                let Some(sender) = usize::try_from(m.args[0])
                    .ok()
                    .filter(|&i| i < self.n_nodes)
                else {
                    return self.unhandled(m, out);
                };
                if !self.tom.is_present(TimeoutKind::MiaB, sender) {
                    self.delete(out, TimeoutKind::MiaB, self.managerid);
                    if sender != self.managerid {
                        out.push(Action::EmitTrace(format!(
                            "manager changes {} -> {sender}",
                            self.managerid
                        )));
                    }
                    self.managerid = sender;
                }
                // The adopted manager may have no entry yet; a plain renew
                // would then leave it unwatched.
                self.renew_or_insert(out, TimeoutKind::MiaB, self.managerid);
                if self.suspicion_count() > 0 {
                    self.suspicion.iter_mut().for_each(|s| *s = false);
                }
            }
            MessageType::MIA_TIMEOUT_B => {
                let manager = self.managerid;
                self.suspicion[manager] = true;
                self.arm_teif(out, TimeoutKind::TeifB, manager);
                self.delete(out, TimeoutKind::MiaB, manager);
            }
            MessageType::TEIF => match subject {
                Some(s) if self.suspicion_count() > 0 && s == self.managerid => {
                    self.delete(out, TimeoutKind::TeifB, s);
                    self.suspicion.iter_mut().for_each(|s| *s = false);
                    out.push(Action::RequestAgentRespawn {
                        target: self.managerid,
                    });
                }
                Some(s) => {
                    self.send(out, s, Message::new(MessageType::ENIA, self.me));
                    self.renew(out, TimeoutKind::MiaB, self.managerid);
                }
                None => self.unhandled(m, out),
            },
            MessageType::TEIF_TIMEOUT_B => {
                let Some(down) = subject else {
                    return self.unhandled(m, out);
                };
                if self.suspicion_count() == 0 {
                    return;
                }
                self.delete(out, TimeoutKind::MiaB, down);
                self.suspicion.iter_mut().for_each(|s| *s = false);
                out.push(Action::RequestNodeReboot { target: down });
                let anid = Message::new(MessageType::ANID, down);
                for i in (0..self.n_nodes).filter(|&i| i != self.managerid && i != self.me) {
                    self.send(out, i, anid);
                }
                let previous = self.managerid;
                self.managerid = choose_next_manager(previous, self.n_nodes);
                out.push(Action::Elected {
                    previous,
                    next: self.managerid,
                });
                if self.managerid == self.me {
                    out.push(Action::BecomeManagerAndRestart);
                    out.extend(self.restart_as(Role::Manager));
                } else {
                    self.send(
                        out,
                        self.managerid,
                        Message::new(MessageType::ENIA, self.me),
                    );
                    self.renew_or_insert(out, TimeoutKind::MiaB, self.managerid);
                }
            }
            MessageType::WITM => match subject {
                Some(s) => {
                    let nmi =
                        Message::new(MessageType::NMI, self.me).with_arg(0, self.managerid as i32);
                    self.send(out, s, nmi);
                }
                None => self.unhandled(m, out),
            },
            MessageType::ENIA => self.rouse_iat(out),
            MessageType::NMI => {
                if m.args[0] != self.managerid as i32 {
                    out.push(Action::EmitTrace(format!(
                        "node {} thinks the manager is {}, this node thinks {}",
                        m.subid, m.args[0], self.managerid
                    )));
                }
            }
            MessageType::REQUEST_DB => self.reply_db(m, out),
            _ => self.unhandled(m, out),
        }
    }
}
